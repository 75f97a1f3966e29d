'''----------------------------------------------------------------------------------------------------------------------------------
# Copyright (C) 2026
#
# This file is part of keymesh.
#
# keymesh is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# keymesh is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License. If not, see http://www.gnu.org/licenses/
---------------------------------------------------------------------------------------------------------------------------------'''


from keymesh.errors import InvalidParameterError
from keymesh.regions.RegionInterface import Region, EdgeProbability
from keymesh.regions.UnitTorus import UnitTorus
from keymesh.regions.UnitSquare import UnitSquare
from keymesh.regions.FullVisibility import FullVisibility

_REGIONS = {
    Region.Kind.UnitTorus: UnitTorus(),
    Region.Kind.UnitSquare: UnitSquare(),
    Region.Kind.FullVisibility: FullVisibility(),
}

_REGION_NAMES = {
    'torus': Region.Kind.UnitTorus,
    'square': Region.Kind.UnitSquare,
    'full': Region.Kind.FullVisibility,
}


def get_region(kind):
    '''
    :param kind: a Region.Kind

    :return: the shared (stateless) region object of that kind
    '''
    try:
        return _REGIONS[kind]
    except KeyError:
        raise InvalidParameterError("unknown region kind: %r" % (kind,))


def parse_region(name):
    '''
    :param name: 'torus', 'square' or 'full'

    :return: the matching Region.Kind
    '''
    try:
        return _REGION_NAMES[name.strip().lower()]
    except KeyError:
        raise InvalidParameterError("unknown region '%s', choose between %s" % (name, ", ".join(_REGION_NAMES)))


def region_label(kind):
    '''
    :return: the short name used on the command line for a Region.Kind
    '''
    for label, value in _REGION_NAMES.items():
        if value == kind:
            return label
    raise InvalidParameterError("unknown region kind: %r" % (kind,))
