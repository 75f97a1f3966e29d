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


from dataclasses import dataclass
from enum import Enum

import numpy as np

from keymesh.errors import InvalidParameterError


@dataclass(frozen=True)
class EdgeProbability:
    '''
    Probability that two independent uniform nodes are within distance r.
    value is the exact probability when exact is True, otherwise the asymptotic point value inside [lower, upper].
    '''
    value: float
    lower: float
    upper: float
    exact: bool


class Region:

    class Kind(Enum):
        UnitTorus = 0
        UnitSquare = 1
        FullVisibility = 2

    kind = None
    region_name = ""
    # True when coordinates wrap around at the unit boundary
    wraps = False
    # False for the full visibility model, where nodes carry no coordinates
    has_positions = True

    def get_kind(self):
        '''
        :return: region kind
        '''
        return self.kind

    def get_name(self):
        '''
        :return: region name
        '''
        return self.region_name

    def displacement(self, a, b):
        '''
        :param a: [..., 2] array of points
        :param b: [..., 2] array of points

        :return: [..., 2] array of per-axis absolute displacements
        '''
        raise NotImplementedError

    def distances(self, a, b):
        '''
        :param a: [..., 2] array of points
        :param b: [..., 2] array of points

        :return: array of distances between a and b (broadcast over leading axes)
        '''
        delta = self.displacement(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        return np.hypot(delta[..., 0], delta[..., 1])

    def distance(self, a, b):
        '''
        :param a: a point (x, y)
        :param b: a point (x, y)

        :return: the distance between a and b in this region
        '''
        return float(self.distances(a, b))

    def sample(self, n, generator):
        '''
        :param n: number of nodes
        :param generator: numpy Generator

        :return: [n, 2] array of i.i.d. uniform points in [0, 1)^2
        '''
        if n < 0:
            raise InvalidParameterError("node count must be non-negative, got %d" % n)
        return generator.random((n, 2))

    def edge_probability(self, r):
        '''
        :param r: transmission radius, 0 < r <= 1/2

        :return: EdgeProbability of two uniform nodes being within distance r
        '''
        raise NotImplementedError
