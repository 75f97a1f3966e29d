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
from fractions import Fraction
from functools import partial
from itertools import combinations, islice
import math

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from keymesh.analysis import components, network_instance, check_setting
from keymesh.core import RegionKind, RngStream, STREAM_CAPTURE
from keymesh.errors import InvalidParameterError, FormulaDomainError, EnumerationGuardError, UnattainableTargetError
from keymesh.graphGen import (AdjacencyGraph, BRUTE_FORCE_LIMIT, geometric_graph, p_q_exact_rational, rho_distribution,
                              rho_u_exact, ring_overlap)
from keymesh.log import get_logger
from keymesh.parallel import map_trials
from keymesh.stats import Estimate

logger = get_logger(__name__)

# probabilities below this are dropped from the law of tau
LAW_FLOOR = 1e-300


class CaptureStrategy:
    '''
    Node-capture adversary: decides which sensors fall into the attacker's hands
    '''

    needs_placement = False

    def select(self, n, placement=None, generator=None):
        '''
        :param n: node count
        :param placement: Placement, for geometric strategies
        :param generator: numpy Generator, for random strategies

        :return: ascending array of captured node ids
        '''
        raise NotImplementedError


@dataclass(frozen=True)
class RandomCapture(CaptureStrategy):
    '''
    Uniform random m-subset of the nodes (no replacement)
    '''
    m: int

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)) or self.m < 0:
            raise InvalidParameterError("capture count must be a non-negative integer, got %r" % (self.m,))

    def select(self, n, placement=None, generator=None):
        if self.m > n:
            raise InvalidParameterError("cannot capture %d of %d nodes" % (self.m, n))
        if self.m == 0:
            return np.empty(0, dtype=np.int64)
        if generator is None:
            raise InvalidParameterError("random capture needs a random stream")
        return np.sort(generator.choice(n, size=self.m, replace=False)).astype(np.int64)


@dataclass(frozen=True)
class ChosenSetCapture(CaptureStrategy):
    nodes: tuple

    def __post_init__(self):
        nodes = tuple(int(node) for node in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise InvalidParameterError("captured node ids must be distinct")
        if any(node < 0 for node in nodes):
            raise InvalidParameterError("node ids must be non-negative")
        object.__setattr__(self, 'nodes', nodes)

    def select(self, n, placement=None, generator=None):
        chosen = np.sort(np.asarray(self.nodes, dtype=np.int64))
        if chosen.size and chosen[-1] >= n:
            raise InvalidParameterError("node %d out of range for n=%d" % (chosen[-1], n))
        return chosen


@dataclass(frozen=True)
class RegionCapture(CaptureStrategy):
    '''
    Every node whose x-coordinate lies in [x_low, x_high]. A positive seam_width also takes the band
    [1 - seam_width, 1) ∪ [0, seam_width) around the wrap seam of the torus.
    '''
    x_low: float
    x_high: float
    seam_width: float = 0.0

    needs_placement = True

    def __post_init__(self):
        if not 0.0 <= self.x_low <= self.x_high <= 1.0:
            raise InvalidParameterError("capture band needs 0 <= x_low <= x_high <= 1, got [%r, %r]"
                                        % (self.x_low, self.x_high))
        if not 0.0 <= self.seam_width < 0.5:
            raise InvalidParameterError("seam width must lie in [0, 1/2), got %r" % (self.seam_width,))

    def select(self, n, placement=None, generator=None):
        if placement is None or placement.coords is None:
            raise InvalidParameterError("region capture needs node positions")
        x = placement.coords[:, 0]
        inside = (x >= self.x_low) & (x <= self.x_high)
        if self.seam_width > 0.0:
            inside |= (x >= 1.0 - self.seam_width) | (x < self.seam_width)
        return np.flatnonzero(inside).astype(np.int64)


@dataclass(frozen=True, eq=False)
class CaptureState:
    '''
    Captured nodes and the keys they expose: compromised_keys is the union of the captured rings
    '''
    captured: np.ndarray
    compromised_keys: np.ndarray
    pool_size: int

    @property
    def tau(self):
        return int(self.compromised_keys.size)

    @property
    def m(self):
        return int(self.captured.size)

    def key_mask(self):
        '''
        :return: bool [P], True for compromised key ids
        '''
        mask = np.zeros(self.pool_size, dtype=bool)
        mask[self.compromised_keys] = True
        return mask

    def captured_mask(self, n):
        mask = np.zeros(n, dtype=bool)
        mask[self.captured] = True
        return mask


@dataclass(frozen=True)
class ResilienceReport:
    '''
    Secure links among non-captured nodes and how many of them the adversary can read.
    p_compromised_empirical is None when no secure link is left.
    '''
    secure_links: int
    compromised_links: int
    p_compromised_empirical: float
    tau: int


@dataclass(frozen=True)
class ResilienceEstimate:
    estimate: Estimate
    tau_mean: float
    analytic_tau: float
    upper_bound: float
    asymptotic: float


@dataclass(frozen=True, eq=False)
class SplitResult:
    '''
    Outcome of the band attack: the capture strategy it built, the two chunks it leaves and the
    number of geometric edges still joining them
    '''
    strategy: RegionCapture
    captured: np.ndarray
    chunk_a: np.ndarray
    chunk_b: np.ndarray
    cross_edges: int

    @property
    def sizes(self):
        return int(self.chunk_a.size), int(self.chunk_b.size)


@dataclass(frozen=True, eq=False)
class ResilientCore:
    nodes: np.ndarray
    graph: AdjacencyGraph
    connected: bool

    @property
    def size(self):
        return int(self.nodes.size)


def capture(strategy, assignment, placement=None, rng=None):
    '''
    :param strategy: CaptureStrategy
    :param assignment: KeyAssignment
    :param placement: Placement, required by RegionCapture
    :param rng: RngStream, required by RandomCapture with m > 0

    :return: CaptureState
    '''
    if strategy.needs_placement and (placement is None or placement.coords is None):
        raise InvalidParameterError("%s needs node positions" % type(strategy).__name__)
    if placement is not None and placement.coords is not None and placement.n != assignment.n:
        raise InvalidParameterError("placement and key assignment disagree on n")
    generator = None if rng is None else rng.generator()
    captured = strategy.select(assignment.n, placement, generator)
    keys = np.unique(assignment.rings[captured].ravel()) if captured.size else np.empty(0, dtype=np.int64)
    return CaptureState(captured=captured, compromised_keys=keys, pool_size=assignment.pool_size)


def link_compromised(i, j, assignment, capture_state, q):
    '''
    A secure link is compromised when every key the two rings share is known to the adversary.

    :return: [bool]
    '''
    captured = capture_state.captured
    if np.isin([i, j], captured).any():
        raise InvalidParameterError("link (%d, %d) has a captured endpoint" % (i, j))
    shared = np.intersect1d(assignment.rings[i], assignment.rings[j], assume_unique=True)
    if shared.size < q:
        raise InvalidParameterError("nodes %d and %d share %d < q=%d keys, no secure link" % (i, j, shared.size, q))
    return bool(np.isin(shared, capture_state.compromised_keys, assume_unique=True).all())


def measure_resilience(graph, assignment, capture_state, q):
    '''
    :param graph: secure topology of the instance (composed graph)
    :param assignment: KeyAssignment
    :param capture_state: CaptureState
    :param q: required key overlap

    :return: ResilienceReport over the links whose endpoints are both non-captured
    '''
    edges = graph.edges
    alive = ~capture_state.captured_mask(graph.n)
    edges = edges[alive[edges[:, 0]] & alive[edges[:, 1]]]

    first, second = edges[:, 0], edges[:, 1]
    overlap = ring_overlap(assignment.rings, assignment.pool_size, first, second)
    secure = overlap.sum(axis=1) >= q
    exposed = capture_state.key_mask()[assignment.rings[first]]
    compromised = secure & ~np.any(overlap & ~exposed, axis=1)

    secure_links = int(secure.sum())
    compromised_links = int(compromised.sum())
    fraction = compromised_links / secure_links if secure_links else None
    return ResilienceReport(secure_links=secure_links, compromised_links=compromised_links,
                            p_compromised_empirical=fraction, tau=capture_state.tau)


def _check_tau(scheme, tau):
    if isinstance(tau, bool) or not 0 <= tau <= scheme.P:
        raise InvalidParameterError("tau must lie in [0, %d], got %r" % (scheme.P, tau))


def _compromise_ratios(P, K, taus):
    '''
    :return: [len(taus), K + 1], entry (a, u) is C(taus[a], u) / C(P, u)
    '''
    taus = np.asarray(taus, dtype=float).reshape(-1, 1)
    i = np.arange(K, dtype=float)[None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        steps = np.where(taus - i > 0, np.log1p(-(P - taus) / (P - i)), -np.inf)
    log_ratio = np.concatenate((np.zeros((taus.shape[0], 1)), np.cumsum(steps, axis=1)), axis=1)
    return np.exp(log_ratio)


def _p_compromised_curve(scheme, taus):
    rho = rho_distribution(scheme)[scheme.q:]
    p_q = math.fsum(rho)
    if p_q == 0.0:
        raise FormulaDomainError("p_q underflows for K=%d P=%d q=%d" % (scheme.K, scheme.P, scheme.q))
    ratios = _compromise_ratios(scheme.P, scheme.K, taus)[:, scheme.q:]
    return np.array([math.fsum(row) for row in ratios * rho]) / p_q


def analytic_p_compromised_tau(scheme, tau):
    '''
    Probability that a secure link between two non-captured nodes is compromised when the adversary holds tau
    distinct keys: sum_{u >= q} C(tau, u)/C(P, u) * rho_u / p_q

    :return: probability, non-decreasing in tau, exactly 1 at tau = P
    '''
    _check_tau(scheme, tau)
    return float(_p_compromised_curve(scheme, [tau])[0])


def analytic_p_compromised_tau_exact(scheme, tau):
    '''
    :return: analytic_p_compromised_tau as an exact Fraction
    '''
    _check_tau(scheme, tau)
    total = sum((Fraction(math.comb(tau, u), math.comb(scheme.P, u)) * rho_u_exact(scheme, u)
                 for u in range(scheme.q, scheme.K + 1)), Fraction(0))
    return total / p_q_exact_rational(scheme)


def p_compromised_brute_force(scheme, tau):
    '''
    Oracle: compromised keys {0..tau-1}, enumerate every ordered pair of rings that forms a secure link.

    :return: exact Fraction of those links whose shared keys are all compromised
    '''
    _check_tau(scheme, tau)
    rings = math.comb(scheme.P, scheme.K)
    if rings * rings > BRUTE_FORCE_LIMIT:
        raise EnumerationGuardError("%d ring pairs exceed the enumeration guard %d" % (rings * rings, BRUTE_FORCE_LIMIT))
    all_rings = [frozenset(ring) for ring in combinations(range(scheme.P), scheme.K)]
    exposed = frozenset(range(tau))
    secure = compromised = 0
    for first in all_rings:
        for second in all_rings:
            shared = first & second
            if len(shared) >= scheme.q:
                secure += 1
                compromised += shared <= exposed
    return Fraction(compromised, secure)


def p_comp_upper_bound(scheme, m):
    '''
    :return: (m K / (P - K))^q, the bound obtained with tau = m K (unclamped)
    '''
    if scheme.P <= scheme.K:
        raise FormulaDomainError("upper bound needs P > K, got K=%d P=%d" % (scheme.K, scheme.P))
    if m < 0:
        raise InvalidParameterError("capture count must be non-negative, got %d" % m)
    return (m * scheme.K / (scheme.P - scheme.K)) ** scheme.q


def p_comp_asymptotic_random(scheme, m):
    '''
    :return: (m K / P)^q, asymptotic p_compromised under random capture of m nodes
    '''
    if m < 0:
        raise InvalidParameterError("capture count must be non-negative, got %d" % m)
    return (m * scheme.K / scheme.P) ** scheme.q


def f_of_q(q, m, K):
    '''
    :return: q! (m/K)^q, proportional to p_compromised when p_q is held fixed
    '''
    if q < 1 or K < 1:
        raise InvalidParameterError("need q >= 1 and K >= 1, got q=%d K=%d" % (q, K))
    return math.factorial(q) * (m / K) ** q


def optimal_q(m, K):
    '''
    Minimisers of f_of_q over q in [1, K]. f(q+1)/f(q) = m(q+1)/K, so f falls while q + 1 < K/m.

    :return: frozenset of overlaps
    '''
    if m < 1 or K < 1:
        raise InvalidParameterError("need m >= 1 and K >= 1, got m=%d K=%d" % (m, K))
    ratio = Fraction(K, m)
    if ratio < 2:
        return frozenset({1})
    if ratio == 2:
        return frozenset({1, 2})
    if ratio.denominator == 1:
        return frozenset({int(ratio) - 1, int(ratio)})
    return frozenset({math.floor(ratio)})


def unassailability_margin(n, K, P, minimum=1.0):
    '''
    Finite-n surrogate of P/K = Ω(n). A margin below `minimum` is logged as a warning.

    :return: (P/K)/n
    '''
    if n < 1 or K < 1 or P < K:
        raise InvalidParameterError("need n >= 1 and 1 <= K <= P, got n=%d K=%d P=%d" % (n, K, P))
    margin = P / K / n
    if margin < minimum:
        logger.warning("unassailability margin (P/K)/n = %.4g below %.4g", margin, minimum)
    return margin


def is_unassailable(n, K, P, minimum=1.0):
    return P / K / n >= minimum


def split_attack(placement, r, ell):
    '''
    Capture the band x in [ell, ell + 2r] (plus the seam band on the torus) and report the chunks
    A1 = {x < ell} and A2 = {x > ell + 2r} it leaves.

    :param placement: Placement on the torus or the square
    :param r: transmission radius
    :param ell: left edge of the captured band

    :return: SplitResult
    '''
    if placement.coords is None:
        raise InvalidParameterError("split attack needs node positions")
    if not r > 0:
        raise InvalidParameterError("transmission radius must be positive, got %r" % (r,))

    x = placement.coords[:, 0]
    if placement.region == RegionKind.UnitTorus:
        if not (r < ell and ell + 3.0 * r < 1.0):
            raise InvalidParameterError("torus split needs r < ell < 1 - 3r, got ell=%r r=%r" % (ell, r))
        strategy = RegionCapture(ell, ell + 2.0 * r, seam_width=r)
        chunk_a = np.flatnonzero((x >= r) & (x < ell))
        chunk_b = np.flatnonzero((x > ell + 2.0 * r) & (x < 1.0 - r))
    else:
        if not 0.0 < ell < 1.0 - 2.0 * r:
            raise InvalidParameterError("square split needs 0 < ell < 1 - 2r, got ell=%r r=%r" % (ell, r))
        strategy = RegionCapture(ell, ell + 2.0 * r)
        chunk_a = np.flatnonzero(x < ell)
        chunk_b = np.flatnonzero(x > ell + 2.0 * r)

    captured = strategy.select(placement.n, placement)
    edges = geometric_graph(placement, r).edges
    side = np.zeros(placement.n, dtype=np.int8)
    side[chunk_a] = 1
    side[chunk_b] = 2
    ends = side[edges]
    cross = int(np.count_nonzero(ends[:, 0] * ends[:, 1] == 2))
    if cross:
        logger.warning("%d geometric edges still join the two chunks", cross)
    return SplitResult(strategy=strategy, captured=captured, chunk_a=chunk_a, chunk_b=chunk_b, cross_edges=cross)


def core_alpha(c, q):
    '''
    :return: 1 - c^(-1/(6q)), the fraction of compromised keys a core node may tolerate
    '''
    if not c > 1.0:
        raise FormulaDomainError("core construction needs c > 1, got %r" % (c,))
    return 1.0 - c ** (-1.0 / (6.0 * q))


def resilient_core(assignment, capture_state, q, alpha):
    '''
    Non-captured nodes keeping at least ceil((1 - alpha) K) uncompromised keys, linked when they share at least
    q uncompromised keys.

    :return: ResilientCore (core ids ascending, core graph relabelled 0..|core|-1, connected flag)
    '''
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError("alpha must lie in (0, 1), got %r" % (alpha,))
    rings, K = assignment.rings, assignment.K
    clean = ~capture_state.key_mask()[rings]
    needed = math.ceil((1.0 - alpha) * K - 1e-9)
    eligible = (clean.sum(axis=1) >= needed) & ~capture_state.captured_mask(assignment.n)
    core = np.flatnonzero(eligible)
    if core.size == 0:
        return ResilientCore(nodes=core, graph=AdjacencyGraph.empty(0), connected=False)

    indptr = np.arange(0, core.size * K + 1, K, dtype=np.int64)
    incidence = sparse.csr_matrix((clean[core].ravel().astype(np.int32), rings[core].ravel(), indptr),
                                  shape=(core.size, assignment.pool_size))
    overlap = sparse.triu(incidence @ incidence.T, k=1, format='coo')
    keep = overlap.data >= q
    graph = AdjacencyGraph.from_pairs(core.size, overlap.row[keep], overlap.col[keep])
    return ResilientCore(nodes=core, graph=graph, connected=components(graph).connected)


def expected_tau(scheme, m):
    '''
    :return: P (1 - (1 - K/P)^m), the expected number of distinct keys held by m random captured nodes
    '''
    if m < 0:
        raise InvalidParameterError("capture count must be non-negative, got %d" % m)
    if m == 0:
        return 0.0
    if scheme.K == scheme.P:
        return float(scheme.P)
    return -scheme.P * math.expm1(m * math.log1p(-scheme.K / scheme.P))


def capture_step_pmf(support, K, P, log_factorial):
    '''
    One more uniform K-ring after `support` distinct keys are known: the number of new keys it reveals is
    hypergeometric (P - s unseen keys among P, K draws).

    :param support: array of distinct-key counts s
    :param log_factorial: gammaln(arange(P + 1) + 1)

    :return: [len(support), K + 1], entry (a, g) is Pr[g new keys | support[a] known]
    '''
    seen = np.asarray(support, dtype=np.int64)[:, None]
    gained = np.arange(K + 1, dtype=np.int64)[None, :]
    unseen = P - seen
    repeated = K - gained
    valid = (gained <= unseen) & (repeated <= seen)

    def log_comb(a, b):
        a = np.broadcast_to(a, valid.shape)
        b = np.broadcast_to(b, valid.shape)
        return log_factorial[np.where(valid, a, 0)] - log_factorial[np.where(valid, b, 0)] \
            - log_factorial[np.where(valid, a - b, 0)]

    log_pmf = log_comb(unseen, gained) + log_comb(seen, repeated) - (log_factorial[P] - log_factorial[K]
                                                                      - log_factorial[P - K])
    return np.where(valid, np.exp(log_pmf), 0.0)


def tau_laws(scheme):
    '''
    Laws of the number of distinct keys held after m = 0, 1, 2, ... random captures, one capture per step.
    Entries below LAW_FLOOR are dropped.

    :return: generator of arrays of length P + 1, entry tau is Pr[|union| = tau]
    '''
    K, P = scheme.K, scheme.P
    log_factorial = gammaln(np.arange(P + 1) + 1.0)
    law = np.zeros(P + 1)
    law[0] = 1.0
    gained = np.arange(K + 1)
    while True:
        yield law
        support = np.flatnonzero(law)
        pmf = capture_step_pmf(support, K, P, log_factorial)
        reached = np.minimum(support[:, None] + gained[None, :], P)
        law = np.bincount(reached.ravel(), weights=(law[support][:, None] * pmf).ravel(), minlength=P + 1)
        law[law < LAW_FLOOR] = 0.0


def tau_distribution(scheme, m):
    '''
    Law of the number of distinct keys in m independent uniform K-rings

    :return: array of length P + 1, entry tau is Pr[|union| = tau]
    '''
    if m < 0:
        raise InvalidParameterError("capture count must be non-negative, got %d" % m)
    return next(islice(tau_laws(scheme), m, None))


def _law_average(law, curve):
    support = np.flatnonzero(law)
    return float(math.fsum(law[support] * curve[support]))


def expected_p_compromised(scheme, m):
    '''
    :return: p_compromised under random capture of m nodes, the tau-conditional formula averaged over the law of tau
    '''
    law = tau_distribution(scheme, m)
    support = np.flatnonzero(law)
    return float(math.fsum(law[support] * _p_compromised_curve(scheme, support)))


def required_captures(scheme, target):
    '''
    Walks m = 0, 1, ... n with one capture step each and stops at the first m reaching the target.

    :return: smallest m <= n with expected_p_compromised(scheme, m) >= target
    '''
    if not 0.0 < target <= 1.0:
        raise UnattainableTargetError("target p_compromised must lie in (0, 1], got %r" % (target,))
    curve = _p_compromised_curve(scheme, np.arange(scheme.P + 1))
    for m, law in enumerate(tau_laws(scheme)):
        if _law_average(law, curve) >= target:
            return m
        if m == scheme.n:
            break
    raise UnattainableTargetError("capturing all %d nodes keeps p_compromised below %g" % (scheme.n, target))


def _resilience_trial(setting, scheme, geo, chan, strategy, master_seed, stream_index):
    stream = RngStream(master_seed, stream_index)
    assignment, placement, graph = network_instance(setting, scheme, geo, chan, stream)
    state = capture(strategy, assignment, placement, stream.substream(STREAM_CAPTURE))
    report = measure_resilience(graph, assignment, state, scheme.q)
    return report.secure_links, report.compromised_links, report.tau, analytic_p_compromised_tau(scheme, report.tau)


def estimate_resilience(setting, scheme, geo=None, chan=None, strategy=RandomCapture(0), trials=500, master_seed=0,
                        first_stream=0, pool=None):
    '''
    Monte Carlo p_compromised: compromised and secure link counts are pooled over the trials.

    :return: ResilienceEstimate (estimate is None when no trial leaves a secure link); analytic_tau is the
             tau-conditional formula averaged with the secure-link counts as weights
    '''
    if trials < 1:
        raise InvalidParameterError("need at least one trial, got %d" % trials)
    check_setting(setting, geo, chan)
    run = partial(_resilience_trial, setting, scheme, geo, chan, strategy, master_seed)
    outcomes = np.array(map_trials(run, range(first_stream, first_stream + trials), pool), dtype=float)

    secure, compromised, taus, analytic = outcomes.T
    total_secure = int(secure.sum())
    if total_secure:
        estimate = Estimate.from_counts(int(compromised.sum()), total_secure)
        analytic_tau = float(np.dot(secure, analytic) / total_secure)
    else:
        logger.warning("no secure link survived the capture in %d trials", trials)
        estimate = None
        analytic_tau = float(analytic.mean())

    upper = asymptotic = None
    if isinstance(strategy, RandomCapture):
        asymptotic = p_comp_asymptotic_random(scheme, strategy.m)
        if scheme.P > scheme.K:
            upper = p_comp_upper_bound(scheme, strategy.m)
    return ResilienceEstimate(estimate=estimate, tau_mean=float(taus.mean()), analytic_tau=analytic_tau,
                              upper_bound=upper, asymptotic=asymptotic)
