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


from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
from scipy import sparse

from keymesh.errors import InvalidParameterError
from keymesh.regions import Region, get_region

RegionKind = Region.Kind

# sub-stream roles below a trial stream
STREAM_KEYS = 0
STREAM_PLACEMENT = 1
STREAM_CHANNEL = 2
STREAM_CAPTURE = 3

_SEED_LIMIT = 2 ** 64


def _require_int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidParameterError("%s must be an integer, got %r" % (name, value))
    if value < minimum:
        raise InvalidParameterError("%s must be >= %d, got %d" % (name, minimum, value))
    return int(value)


@dataclass(frozen=True)
class SchemeParams:
    '''
    q-composite key predistribution scheme: n sensors, rings of K keys drawn from a pool of P, links need q shared keys
    '''
    n: int
    K: int
    P: int
    q: int

    def __post_init__(self):
        for name, minimum in (('n', 1), ('K', 1), ('P', 1), ('q', 1)):
            object.__setattr__(self, name, _require_int(name, getattr(self, name), minimum))
        if not self.q <= self.K <= self.P:
            raise InvalidParameterError("scheme needs 1 <= q <= K <= P, got q=%d K=%d P=%d" % (self.q, self.K, self.P))

    def replace(self, **changes):
        values = {'n': self.n, 'K': self.K, 'P': self.P, 'q': self.q}
        values.update(changes)
        return SchemeParams(**values)


@dataclass(frozen=True)
class GeoParams:
    '''
    Deployment region and transmission radius (radius is None under full visibility)
    '''
    region: RegionKind
    r: float = None

    def __post_init__(self):
        if not isinstance(self.region, RegionKind):
            raise InvalidParameterError("region must be a RegionKind, got %r" % (self.region,))
        if self.region == RegionKind.FullVisibility:
            if self.r is not None:
                raise InvalidParameterError("full visibility carries no transmission radius")
            return
        if self.r is None or not math.isfinite(self.r) or self.r <= 0:
            raise InvalidParameterError("transmission radius must be a positive real, got %r" % (self.r,))
        object.__setattr__(self, 'r', float(self.r))

    @property
    def disk_model(self):
        return self.region != RegionKind.FullVisibility

    def replace(self, **changes):
        values = {'region': self.region, 'r': self.r}
        values.update(changes)
        return GeoParams(**values)


@dataclass(frozen=True)
class ChannelParams:
    '''
    Link unreliability: every topological link is independently active with probability t
    '''
    t: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.t, (int, float)) and 0.0 < self.t <= 1.0):
            raise InvalidParameterError("link-active probability must lie in (0, 1], got %r" % (self.t,))
        object.__setattr__(self, 't', float(self.t))


@dataclass(frozen=True)
class RngStream:
    '''
    Counter-based random stream keyed by (master_seed, stream_index).
    Trial i of an experiment uses stream_index i, and path addresses sub-streams inside the trial.
    '''
    master_seed: int
    stream_index: int
    path: tuple = field(default=())

    def __post_init__(self):
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, (int, np.integer)) \
                or not 0 <= self.master_seed < _SEED_LIMIT:
            raise InvalidParameterError("master seed must be a 64-bit unsigned integer, got %r" % (self.master_seed,))
        _require_int('stream_index', self.stream_index, 0)
        object.__setattr__(self, 'path', tuple(int(p) for p in self.path))

    def substream(self, *path):
        '''
        :param path: non-negative integers addressing a child stream (e.g. STREAM_PLACEMENT, slot)

        :return: the child RngStream
        '''
        return RngStream(self.master_seed, self.stream_index, self.path + tuple(path))

    def generator(self):
        '''
        :return: a fresh numpy Generator positioned at the start of this stream
        '''
        seed_sequence = np.random.SeedSequence(int(self.master_seed),
                                               spawn_key=(int(self.stream_index),) + self.path)
        return np.random.Generator(np.random.Philox(seed_sequence))


@dataclass(frozen=True, eq=False)
class KeyAssignment:
    '''
    Key rings of the n sensors: rings[i] is the ascending list of the K key ids held by sensor i, ids in [0, P)
    '''
    rings: np.ndarray
    pool_size: int

    def __post_init__(self):
        rings = np.asarray(self.rings, dtype=np.int64)
        if rings.ndim != 2:
            raise InvalidParameterError("rings must be an [n, K] array")
        if rings.size and (rings.min() < 0 or rings.max() >= self.pool_size):
            raise InvalidParameterError("key ids must lie in [0, %d)" % self.pool_size)
        if rings.shape[1] > 1 and not np.all(np.diff(rings, axis=1) > 0):
            raise InvalidParameterError("every ring must be strictly ascending (distinct sorted key ids)")
        rings.setflags(write=False)
        object.__setattr__(self, 'rings', rings)

    @property
    def n(self):
        return self.rings.shape[0]

    @property
    def K(self):
        return self.rings.shape[1]

    def ring(self, i):
        return self.rings[i]

    @cached_property
    def incidence(self):
        '''
        :return: [n, P] sparse 0/1 matrix, row i marks the keys of sensor i
        '''
        n, K = self.rings.shape
        indptr = np.arange(0, n * K + 1, K, dtype=np.int64)
        data = np.ones(n * K, dtype=np.int32)
        return sparse.csr_matrix((data, self.rings.ravel(), indptr), shape=(n, self.pool_size))


@dataclass(frozen=True, eq=False)
class Placement:
    '''
    Node coordinates in [0, 1)^2 of the deployment region (coords is None under full visibility)
    '''
    region: RegionKind
    coords: np.ndarray = None

    def __post_init__(self):
        if self.coords is None:
            return
        coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        if coords.size and (coords.min() < 0.0 or coords.max() >= 1.0):
            raise InvalidParameterError("coordinates must lie in [0, 1) on each axis")
        coords.setflags(write=False)
        object.__setattr__(self, 'coords', coords)

    @property
    def n(self):
        return 0 if self.coords is None else self.coords.shape[0]


def assign_keys(params, rng):
    '''
    Draw an independent uniform K-subset of the pool for every sensor.
    Floyd's sampling runs for all rings at once: O(n K^2) vector work, no pass over the pool.

    :param params: SchemeParams
    :param rng: RngStream

    :return: KeyAssignment with sorted rings
    '''
    generator = rng.generator()
    n, K, P = params.n, params.K, params.P
    rings = np.empty((n, K), dtype=np.int64)

    for column, j in enumerate(range(P - K, P)):
        pick = generator.integers(0, j + 1, size=n)
        taken = (rings[:, :column] == pick[:, None]).any(axis=1)
        rings[:, column] = np.where(taken, j, pick)

    rings.sort(axis=1)
    return KeyAssignment(rings, P)


def place_nodes(n, geo, rng):
    '''
    :param n: node count
    :param geo: GeoParams (torus or square)
    :param rng: RngStream

    :return: Placement of n i.i.d. uniform nodes
    '''
    if not geo.disk_model:
        raise InvalidParameterError("node placement is undefined under full visibility")
    coords = get_region(geo.region).sample(_require_int('n', n, 0), rng.generator())
    return Placement(geo.region, coords)


def distance(a, b, region):
    '''
    :param a: point (x, y)
    :param b: point (x, y)
    :param region: RegionKind (torus or square)

    :return: distance between a and b, with wrap-around on the torus
    '''
    return get_region(region).distance(a, b)
