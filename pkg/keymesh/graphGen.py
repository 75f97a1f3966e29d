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


from fractions import Fraction
from functools import cached_property, reduce
from itertools import combinations
import math

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from keymesh.errors import InvalidParameterError, FormulaDomainError, EnumerationGuardError, UnattainableTargetError
from keymesh.log import get_logger
from keymesh.regions import get_region

logger = get_logger(__name__)

BRUTE_FORCE_LIMIT = 10 ** 5
# pairs per vectorised block when intersecting rings
_PAIR_BLOCK = 1 << 16
# rows per block of the brute-force geometric search
_ROW_BLOCK = 512
# relative slack when comparing a computed p_q against a target
_PQ_TOLERANCE = 1e-12

# half of the 3x3 cell neighbourhood, every unordered pair of cells is visited once
_HALF_NEIGHBOURHOOD = ((0, 0), (0, 1), (1, -1), (1, 0), (1, 1))


class AdjacencyGraph:
    '''
    Undirected simple graph on nodes 0..n-1. Edges are stored once, as the ascending keys i * n + j with i < j.
    '''

    def __init__(self, n, keys=None):
        if n < 0:
            raise InvalidParameterError("node count must be non-negative, got %d" % n)
        self.n = int(n)
        keys = np.empty(0, dtype=np.int64) if keys is None else np.asarray(keys, dtype=np.int64)
        keys.setflags(write=False)
        self.keys = keys

    @classmethod
    def from_pairs(cls, n, first, second):
        '''
        :param n: node count
        :param first: endpoint array
        :param second: endpoint array (same length)

        :return: AdjacencyGraph with duplicates merged
        '''
        first = np.asarray(first, dtype=np.int64)
        second = np.asarray(second, dtype=np.int64)
        if first.shape != second.shape:
            raise InvalidParameterError("endpoint arrays differ in length")
        if first.size:
            if np.any(first == second):
                raise InvalidParameterError("self-loops are not allowed")
            if min(first.min(), second.min()) < 0 or max(first.max(), second.max()) >= n:
                raise InvalidParameterError("edge endpoint out of range for n=%d" % n)
        low = np.minimum(first, second)
        high = np.maximum(first, second)
        return cls(n, np.unique(low * n + high))

    @classmethod
    def complete(cls, n):
        first, second = np.triu_indices(n, 1)
        return cls(n, first.astype(np.int64) * n + second)

    @classmethod
    def empty(cls, n):
        return cls(n)

    @property
    def edge_count(self):
        return int(self.keys.size)

    @property
    def edges(self):
        '''
        :return: [m, 2] array of (i, j) with i < j in lexicographic order
        '''
        if self.n == 0:
            return np.empty((0, 2), dtype=np.int64)
        return np.column_stack((self.keys // self.n, self.keys % self.n))

    @cached_property
    def csr(self):
        '''
        :return: symmetric [n, n] sparse adjacency matrix with sorted column indices
        '''
        edges = self.edges
        rows = np.concatenate((edges[:, 0], edges[:, 1]))
        cols = np.concatenate((edges[:, 1], edges[:, 0]))
        data = np.ones(rows.size, dtype=np.int8)
        matrix = sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        matrix.sort_indices()
        return matrix

    @property
    def adjacency(self):
        '''
        :return: per-node ascending neighbour arrays
        '''
        matrix = self.csr
        return [matrix.indices[matrix.indptr[i]:matrix.indptr[i + 1]] for i in range(self.n)]

    def neighbors(self, i):
        matrix = self.csr
        return matrix.indices[matrix.indptr[i]:matrix.indptr[i + 1]]

    def degrees(self):
        return np.diff(self.csr.indptr)

    def has_edge(self, i, j):
        if i == j:
            return False
        low, high = min(i, j), max(i, j)
        key = low * self.n + high
        position = np.searchsorted(self.keys, key)
        return bool(position < self.keys.size and self.keys[position] == key)

    def density(self):
        pairs = self.n * (self.n - 1) // 2
        return self.edge_count / pairs if pairs else 0.0

    def __eq__(self, other):
        if not isinstance(other, AdjacencyGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.keys, other.keys)

    def __repr__(self):
        return "AdjacencyGraph(n=%d, edges=%d)" % (self.n, self.edge_count)


def ring_overlap(rings, pool_size, first, second):
    '''
    :return: bool [m, K], entry (e, a) tells whether key rings[first[e], a] also belongs to ring second[e]
    '''
    m, K = first.size, rings.shape[1]
    matches = np.zeros((m, K), dtype=bool)
    for start in range(0, m, _PAIR_BLOCK):
        stop = min(m, start + _PAIR_BLOCK)
        # offsetting row e by e * P turns the block of sorted rings into one ascending array
        offset = (np.arange(stop - start, dtype=np.int64) * pool_size)[:, None]
        haystack = (rings[second[start:stop]] + offset).ravel()
        needles = (rings[first[start:stop]] + offset).ravel()
        position = np.minimum(np.searchsorted(haystack, needles), haystack.size - 1)
        matches[start:stop] = (haystack[position] == needles).reshape(stop - start, K)
    return matches


def _check_node(assignment, i):
    if not 0 <= i < assignment.n:
        raise InvalidParameterError("node %d out of range for n=%d" % (i, assignment.n))


def shared_key_count(assignment, i, j):
    '''
    :param assignment: KeyAssignment
    :param i: node id
    :param j: node id, different from i

    :return: |R_i ∩ R_j|
    '''
    _check_node(assignment, i)
    _check_node(assignment, j)
    if i == j:
        raise InvalidParameterError("shared key count needs two distinct nodes")
    return int(np.intersect1d(assignment.rings[i], assignment.rings[j], assume_unique=True).size)


def shared_key_counts(assignment, first, second):
    '''
    Vectorised shared_key_count over node pairs

    :return: int array, entry e is |R_first[e] ∩ R_second[e]|
    '''
    first = np.asarray(first, dtype=np.int64)
    second = np.asarray(second, dtype=np.int64)
    return ring_overlap(assignment.rings, assignment.pool_size, first, second).sum(axis=1)


def key_graph(assignment, q):
    '''
    :param assignment: KeyAssignment
    :param q: required key overlap

    :return: the key graph G_q: edge {i, j} iff rings i and j share at least q keys
    '''
    if q < 1:
        raise InvalidParameterError("key overlap q must be >= 1, got %d" % q)
    incidence = assignment.incidence
    overlap = sparse.triu(incidence @ incidence.T, k=1, format='coo')
    keep = overlap.data >= q
    return AdjacencyGraph.from_pairs(assignment.n, overlap.row[keep], overlap.col[keep])


def _grid_cells(r):
    cells = max(1, int(math.floor(1.0 / r)))
    while cells > 1 and 1.0 / cells < r:
        cells -= 1
    return cells


def _grid_candidates(coords, cells, wraps):
    '''
    Candidate pairs from a uniform grid of cells with side >= r: every pair within distance r
    sits in the same or in adjacent cells (adjacency wraps on the torus).
    '''
    cell_x = np.minimum((coords[:, 0] * cells).astype(np.int64), cells - 1)
    cell_y = np.minimum((coords[:, 1] * cells).astype(np.int64), cells - 1)
    cell_id = cell_x * cells + cell_y

    order = np.argsort(cell_id, kind='stable')
    counts = np.bincount(cell_id, minlength=cells * cells)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    sorted_x, sorted_y = cell_x[order], cell_y[order]

    firsts, seconds = [], []
    for dx, dy in _HALF_NEIGHBOURHOOD:
        near_x, near_y = sorted_x + dx, sorted_y + dy
        if wraps:
            near_x, near_y = near_x % cells, near_y % cells
            source = np.arange(order.size)
        else:
            source = np.flatnonzero((near_x >= 0) & (near_x < cells) & (near_y >= 0) & (near_y < cells))
        near = near_x[source] * cells + near_y[source]
        fan_out = counts[near]
        total = int(fan_out.sum())
        if total == 0:
            continue
        # ragged expansion: each source position meets every position of its neighbour cell
        src = np.repeat(source, fan_out)
        dst = np.repeat(starts[near], fan_out) + np.arange(total) - np.repeat(np.cumsum(fan_out) - fan_out, fan_out)
        if (dx, dy) == (0, 0):
            keep = dst > src
            src, dst = src[keep], dst[keep]
        firsts.append(order[src])
        seconds.append(order[dst])

    if not firsts:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(firsts), np.concatenate(seconds)


def _brute_force_within(coords, r, region):
    n = coords.shape[0]
    firsts, seconds = [], []
    for start in range(0, n - 1, _ROW_BLOCK):
        rows = np.arange(start, min(n - 1, start + _ROW_BLOCK))
        close = region.distances(coords[rows][:, None, :], coords[None, :, :]) <= r
        close &= np.arange(n)[None, :] > rows[:, None]
        row, col = np.nonzero(close)
        firsts.append(rows[row])
        seconds.append(col)
    if not firsts:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(firsts), np.concatenate(seconds)


def geometric_graph(placement, r, brute_force=False):
    '''
    :param placement: Placement on the torus or the square
    :param r: transmission radius
    :param brute_force: [bool] compare every pair instead of using the cell grid (cross-checking, n <= 2000)

    :return: the geometric graph G_RGG: edge {i, j} iff distance(i, j) <= r
    '''
    if placement.coords is None:
        raise InvalidParameterError("geometric graph needs node coordinates (not full visibility)")
    if placement.n == 0:
        raise InvalidParameterError("geometric graph needs a non-empty placement")
    if not r > 0:
        raise InvalidParameterError("transmission radius must be positive, got %r" % (r,))

    region = get_region(placement.region)
    coords = placement.coords
    cells = _grid_cells(r)

    # the torus grid needs 3 cells per axis, otherwise wrapped neighbours repeat
    if brute_force or (region.wraps and cells < 3):
        first, second = _brute_force_within(coords, r, region)
    else:
        first, second = _grid_candidates(coords, cells, region.wraps)
        keep = region.distances(coords[first], coords[second]) <= r
        first, second = first[keep], second[keep]
    return AdjacencyGraph.from_pairs(placement.n, first, second)


def _unrank_pairs(index, n):
    '''
    :return: the (i, j), i < j, at positions index of the lexicographic pair order
    '''
    k = np.asarray(index, dtype=np.int64)
    row = (n - 2 - np.floor(np.sqrt(-8.0 * k + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5)).astype(np.int64)

    def row_start(i):
        return i * n - i * (i + 1) // 2

    # float rounding can land one row off
    row = np.where(row_start(row) > k, row - 1, row)
    row = np.where(row_start(row + 1) <= k, row + 1, row)
    col = k - row_start(row) + row + 1
    return row, col


def er_graph(n, p, rng):
    '''
    :param n: node count
    :param p: edge probability
    :param rng: RngStream

    :return: Erdős–Rényi graph: every pair carries an edge independently with probability p
    '''
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError("edge probability must lie in [0, 1], got %r" % (p,))
    if n < 0:
        raise InvalidParameterError("node count must be non-negative, got %d" % n)
    pairs = n * (n - 1) // 2
    if pairs == 0:
        return AdjacencyGraph.empty(n)

    generator = rng.generator()
    count = int(generator.binomial(pairs, p))
    chosen = np.sort(generator.choice(pairs, size=count, replace=False))
    first, second = _unrank_pairs(chosen, n)
    return AdjacencyGraph(n, first * n + second)


def intersect_graphs(graphs):
    '''
    :param graphs: list of AdjacencyGraph on the same node set

    :return: graph whose edges are present in every input graph
    '''
    graphs = list(graphs)
    if not graphs:
        raise InvalidParameterError("intersection needs at least one graph")
    n = graphs[0].n
    if any(graph.n != n for graph in graphs):
        raise InvalidParameterError("cannot intersect graphs with different node counts")
    keys = reduce(lambda left, right: np.intersect1d(left, right, assume_unique=True),
                  (graph.keys for graph in graphs))
    return AdjacencyGraph(n, keys)


def induced_subgraph(graph, keep):
    '''
    :param graph: AdjacencyGraph
    :param keep: node ids to retain

    :return: (subgraph relabelled 0..len(keep)-1 in ascending id order, sorted kept ids)
    '''
    keep = np.unique(np.asarray(keep, dtype=np.int64))
    if keep.size and (keep[0] < 0 or keep[-1] >= graph.n):
        raise InvalidParameterError("node id out of range for n=%d" % graph.n)
    relabel = np.full(graph.n, -1, dtype=np.int64)
    relabel[keep] = np.arange(keep.size)
    edges = graph.edges
    first, second = relabel[edges[:, 0]], relabel[edges[:, 1]]
    inside = (first >= 0) & (second >= 0)
    # relabelling is monotone, so keys stay ascending
    return AdjacencyGraph(keep.size, first[inside] * keep.size + second[inside]), keep


def composed_graph(assignment, q, placement=None, r=None, t=1.0, rng=None):
    '''
    Secure topology of one network instance:
    full visibility -> G_q, disk model -> G_q ∩ G_RGG, disk model with unreliable links -> G_q ∩ G_RGG ∩ G_ER(t).
    The unreliable overlay thins the surviving edges with independent coins, which has the law of
    intersecting with an independent ER(n, t) graph.

    :param assignment: KeyAssignment
    :param q: required key overlap
    :param placement: Placement, None under full visibility
    :param r: transmission radius (disk model)
    :param t: link-active probability
    :param rng: RngStream for the link coins, needed when t < 1

    :return: AdjacencyGraph
    '''
    if placement is None:
        graph = key_graph(assignment, q)
    else:
        if placement.n != assignment.n:
            raise InvalidParameterError("placement and key assignment disagree on n")
        geometric = geometric_graph(placement, r)
        edges = geometric.edges
        secure = shared_key_counts(assignment, edges[:, 0], edges[:, 1]) >= q
        graph = AdjacencyGraph(assignment.n, geometric.keys[secure])

    if t < 1.0:
        if rng is None:
            raise InvalidParameterError("unreliable links need a random stream")
        active = rng.generator().random(graph.edge_count) < t
        graph = AdjacencyGraph(graph.n, graph.keys[active])
    return graph


def write_edge_list(graph, stream):
    '''
    Dump a graph as a header line "n m" followed by one "i j" line (i < j) per edge
    '''
    stream.write("%d %d\n" % (graph.n, graph.edge_count))
    for i, j in graph.edges:
        stream.write("%d %d\n" % (i, j))


def read_edge_list(stream):
    '''
    :return: AdjacencyGraph read from the "n m" / "i j" dump format
    '''
    header = stream.readline().split()
    if len(header) != 2:
        raise InvalidParameterError("edge list header must be 'n m'")
    n, m = int(header[0]), int(header[1])
    pairs = [line.split() for line in stream if line.strip()]
    if len(pairs) != m:
        raise InvalidParameterError("edge list announces %d edges but holds %d" % (m, len(pairs)))
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return AdjacencyGraph.from_pairs(n, pairs[:, 0], pairs[:, 1])


def _log_rho_all(K, P):
    '''
    log rho_u for u = 0..K. rho_u = C(K,u) * K!/(K-u)! * prod_{i<K-u} (P-K-i)/(P-i) / prod_{i=K-u}^{K-1} (P-i),
    every factor is summed in log space as log1p or a small log, which keeps 1e-13 relative accuracy at P ~ 1e5.
    '''
    u = np.arange(K + 1)
    if K == P:
        # the whole pool is in every ring
        return np.where(u == K, 0.0, -np.inf)

    i = np.arange(K)
    with np.errstate(divide='ignore', invalid='ignore'):
        head = np.where(P - K - i > 0, np.log1p(-K / (P - i)), -np.inf)
    head_prefix = np.concatenate(([0.0], np.cumsum(head)))
    pool_prefix = np.concatenate(([0.0], np.cumsum(np.log(P - i))))

    rest = K - u
    log_comb = gammaln(K + 1) - gammaln(u + 1) - gammaln(rest + 1)
    log_falling = gammaln(K + 1) - gammaln(rest + 1)
    return log_comb + log_falling + head_prefix[rest] - (pool_prefix[K] - pool_prefix[rest])


def rho_distribution(params):
    '''
    :return: array rho_0..rho_K of shared-key-count probabilities
    '''
    return np.exp(_log_rho_all(params.K, params.P))


def rho_u(params, u):
    '''
    :param params: SchemeParams
    :param u: shared key count, 0 <= u <= K

    :return: probability that two rings share exactly u keys, C(K,u) C(P-K,K-u) / C(P,K)
    '''
    if not 0 <= u <= params.K:
        raise InvalidParameterError("u must lie in [0, %d], got %d" % (params.K, u))
    return float(np.exp(_log_rho_all(params.K, params.P)[u]))


def rho_u_exact(params, u):
    '''
    :return: rho_u as an exact Fraction (big-integer binomials)
    '''
    if not 0 <= u <= params.K:
        raise InvalidParameterError("u must lie in [0, %d], got %d" % (params.K, u))
    K, P = params.K, params.P
    return Fraction(math.comb(K, u) * math.comb(P - K, K - u), math.comb(P, K))


def _p_q(K, P, q):
    return math.fsum(np.exp(_log_rho_all(K, P)[q:]))


def p_q_exact(params):
    '''
    :return: key-setup probability p_q = sum_{u >= q} rho_u
    '''
    return _p_q(params.K, params.P, params.q)


def p_q_exact_rational(params):
    '''
    :return: p_q as an exact Fraction
    '''
    return sum((rho_u_exact(params, u) for u in range(params.q, params.K + 1)), Fraction(0))


def key_edge_proxy(K, P, q):
    '''
    :return: (1/q!) K^(2q) / P^q, unclamped
    '''
    return math.exp(q * (2.0 * math.log(K) - math.log(P)) - gammaln(q + 1))


def p_q_asymptotic(params):
    '''
    :return: (1/q!) K^(2q) / P^q clamped to [0, 1], the asymptotic value of p_q for K = ω(1), K = o(√P)
    '''
    return min(1.0, key_edge_proxy(params.K, params.P, params.q))


def mu_region(geo):
    '''
    :param geo: GeoParams on the torus or the square with 0 < r <= 1/2

    :return: EdgeProbability, exact pi r^2 on the torus, bounds [(1-2r)^2 pi r^2, pi r^2] on the square
    '''
    if not geo.disk_model:
        raise InvalidParameterError("mu is defined for the disk model only")
    if geo.r > 0.5:
        raise FormulaDomainError("edge probability formulas need r <= 1/2, got r=%g" % geo.r)
    return get_region(geo.region).edge_probability(geo.r)


def solve_pool_size(K, q, target_pq):
    '''
    p_q decreases with P, bisection finds the last pool size that still reaches the target.

    :param K: key ring size
    :param q: required key overlap
    :param target_pq: target key-setup probability

    :return: the largest P with p_q(K, P, q) >= target_pq
    '''
    if not 1 <= q <= K:
        raise InvalidParameterError("need 1 <= q <= K, got q=%d K=%d" % (q, K))
    if not 0.0 < target_pq <= 1.0:
        raise UnattainableTargetError("target p_q must lie in (0, 1], got %r" % (target_pq,))

    def reaches(P):
        return _p_q(K, P, q) >= target_pq * (1.0 - _PQ_TOLERANCE)

    low, high = K, 2 * K
    while reaches(high):
        low, high = high, 2 * high
        if high > 2 ** 53:
            raise UnattainableTargetError("no finite pool size bounds p_q >= %r" % (target_pq,))
    while high - low > 1:
        middle = (low + high) // 2
        if reaches(middle):
            low = middle
        else:
            high = middle
    logger.debug("pool size %d keeps p_q >= %g for K=%d q=%d", low, target_pq, K, q)
    return low


def rho_brute_force(params, u):
    '''
    Oracle for rho_u: fix the first ring to {0..K-1} and enumerate every possible second ring.

    :return: exact Fraction
    '''
    K, P = params.K, params.P
    total = math.comb(P, K)
    if total > BRUTE_FORCE_LIMIT:
        raise EnumerationGuardError("C(%d, %d) = %d rings exceed the enumeration guard %d" % (P, K, total, BRUTE_FORCE_LIMIT))
    if not 0 <= u <= K:
        raise InvalidParameterError("u must lie in [0, %d], got %d" % (K, u))
    fixed = set(range(K))
    hits = sum(1 for ring in combinations(range(P), K) if len(fixed.intersection(ring)) == u)
    return Fraction(hits, total)

