import logging

import pytest

from keymesh.core import RngStream, SchemeParams
from keymesh.parallel import THREADS_ENV


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    # trials run inline unless a test opens its own pool
    monkeypatch.setenv(THREADS_ENV, '1')


@pytest.fixture(autouse=True)
def package_logger():
    yield
    logger = logging.getLogger('keymesh')
    for handler in list(logger.handlers):
        if getattr(handler, '_keymesh_handler', False):
            logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def small_scheme():
    return SchemeParams(n=50, K=8, P=100, q=2)


@pytest.fixture
def stream():
    return RngStream(7, 0)
