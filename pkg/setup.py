from setuptools import setup, find_packages

package_name = 'keymesh'

with open('README.md', 'r') as file:
    long_description = file.read()

setup(
    name=package_name,
    version='1.0.0',
    packages=find_packages(exclude=['tests']),
    data_files=[],
    install_requires=['setuptools', 'numpy>=1.22', 'scipy>=1.8', 'termcolor', 'pandas>=1.5', 'tqdm'],
    zip_safe=True,
    description='Simulation and analysis of secure sensor networks under the q-composite key predistribution scheme',
    license='GNU GENERAL PUBLIC LICENSE v3',
    entry_points={'console_scripts': ['keymesh = keymesh.cli:main']},
    extras_require={'dev': ['pytest>=3.7', 'networkx']},  # to install with this run 'pip install -e .[dev]'
    long_description=long_description,
    long_description_content_type='text/markdown',
)
