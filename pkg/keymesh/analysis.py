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
from functools import partial
import math

import numpy as np
from scipy.sparse.csgraph import connected_components

from keymesh.core import (RegionKind, RngStream, STREAM_CAPTURE, STREAM_CHANNEL, STREAM_KEYS, STREAM_PLACEMENT,
                          assign_keys, place_nodes)
from keymesh.errors import InvalidParameterError, FormulaDomainError
from keymesh.graphGen import composed_graph, induced_subgraph, key_edge_proxy
from keymesh.log import get_logger
from keymesh.parallel import map_trials
from keymesh.stats import Estimate

logger = get_logger(__name__)


@dataclass(frozen=True)
class ConnectivityReport:
    '''
    Connected components of a graph: sizes in descending order, isolated nodes are the size-1 components
    '''
    connected: bool
    component_sizes: tuple
    isolated_count: int

    @property
    def component_count(self):
        return len(self.component_sizes)


@dataclass(frozen=True)
class SettingSpec:
    '''
    Network setting: visibility model, link unreliability and mobility
    '''
    visibility: RegionKind
    unreliable: bool = False
    mobile: bool = False

    def __post_init__(self):
        if not isinstance(self.visibility, RegionKind):
            raise InvalidParameterError("visibility must be a RegionKind, got %r" % (self.visibility,))
        if self.visibility == RegionKind.FullVisibility and (self.unreliable or self.mobile):
            raise InvalidParameterError("full visibility is studied without unreliable links or mobility")

    @property
    def disk_model(self):
        return self.visibility != RegionKind.FullVisibility


@dataclass(frozen=True)
class ThresholdCheck:
    '''
    Achieved constant c of the edge-probability proxy against the connectivity threshold of the setting
    '''
    achieved_c: float
    threshold: float
    satisfied: bool
    effective_n: int


@dataclass(frozen=True)
class LambdaThresholds:
    k_over_ln_n: float = 3.0
    k2_over_p: float = 0.2
    kn_over_p: float = 0.2
    r: float = 0.3


@dataclass(frozen=True)
class LambdaAdvisory:
    '''
    Finite-n surrogates of the scaling conditions K = ω(ln n), K = o(min{√P, P/n}), r = o(1).
    A flag is None when its quantity does not apply (no radius under full visibility, no ln n below n = 2).
    '''
    k_over_ln_n: float
    k2_over_p: float
    kn_over_p: float
    r: float
    k_over_ln_n_ok: bool
    k2_over_p_ok: bool
    kn_over_p_ok: bool
    r_ok: bool

    @property
    def passed(self):
        return all(flag is not False for flag in (self.k_over_ln_n_ok, self.k2_over_p_ok, self.kn_over_p_ok, self.r_ok))


@dataclass(frozen=True)
class ConnectivityEstimate:
    estimate: Estimate
    isolated_mean: float
    components_mean: float


def components(graph):
    '''
    :param graph: AdjacencyGraph with n >= 1

    :return: ConnectivityReport
    '''
    if graph.n < 1:
        raise InvalidParameterError("connectivity is undefined on an empty graph")
    _, labels = connected_components(graph.csr, directed=False)
    sizes = np.bincount(labels)
    return ConnectivityReport(connected=bool(sizes.size == 1),
                              component_sizes=tuple(int(size) for size in np.sort(sizes)[::-1]),
                              isolated_count=int(np.count_nonzero(sizes == 1)))


def isolated_nodes(graph):
    '''
    :return: ids of the nodes without any incident edge
    '''
    return np.flatnonzero(graph.degrees() == 0)


def _log_n(n):
    if n < 2:
        raise FormulaDomainError("threshold constants need n >= 2, got %d" % n)
    return math.log(n)


def c_star(n, K, P):
    '''
    :return: max{1 + ln(P/K^2)/ln n, 4 ln(P/K^2)/ln n}, the square-region threshold for reliable links
    '''
    x = math.log(P / (K * K)) / _log_n(n)
    return max(1.0 + x, 4.0 * x)


def c_pound(n, K, P, t, q):
    '''
    :return: max{1 + (q ln(P/K^2) + ln(1/t))/ln n, 4 (q ln(P/K^2) + ln(1/t))/ln n}, the square-region threshold
             with unreliable links
    '''
    if not 0.0 < t <= 1.0:
        raise FormulaDomainError("link-active probability must lie in (0, 1], got %r" % (t,))
    log_n = _log_n(n)
    x = (q * math.log(P / (K * K)) + math.log(1.0 / t)) / log_n
    return max(1.0 + x, 4.0 * x)


def achieved_c(setting, scheme, geo=None, chan=None, captured=0):
    '''
    Writes the edge-probability proxy (1/q!) K^(2q)/P^q [* pi r^2] [* t] as c ln n' / n' with n' = n - captured
    and compares c with the threshold of the setting (1, c_n* or c_n#).

    :param setting: SettingSpec
    :param scheme: SchemeParams
    :param geo: GeoParams, required under the disk model
    :param chan: ChannelParams, required with unreliable links
    :param captured: number of randomly captured nodes

    :return: ThresholdCheck
    '''
    effective_n = scheme.n - captured
    if captured < 0 or effective_n < 2:
        raise InvalidParameterError("need 0 <= captured <= n - 2, got %d of %d" % (captured, scheme.n))

    proxy = key_edge_proxy(scheme.K, scheme.P, scheme.q)
    if setting.disk_model:
        if geo is None or geo.region != setting.visibility:
            raise InvalidParameterError("disk model needs a radius on the %s" % setting.visibility.name)
        proxy *= math.pi * geo.r * geo.r
    t = 1.0
    if setting.unreliable:
        if chan is None:
            raise InvalidParameterError("unreliable links need a link-active probability")
        t = chan.t
        proxy *= t

    c = proxy * effective_n / _log_n(effective_n)
    if setting.visibility == RegionKind.UnitSquare:
        if setting.unreliable:
            threshold = c_pound(effective_n, scheme.K, scheme.P, t, scheme.q)
        else:
            threshold = c_star(effective_n, scheme.K, scheme.P)
    else:
        threshold = 1.0
    return ThresholdCheck(achieved_c=c, threshold=threshold, satisfied=c > threshold, effective_n=effective_n)


def lambda_condition_check(scheme, geo=None, thresholds=LambdaThresholds()):
    '''
    Advisory only: the scaling conditions are asymptotic and cannot be decided at a single n.
    Below n = 2 there is no ln n, K/ln n and its flag are then None.

    :return: LambdaAdvisory, failing flags are logged as warnings
    '''
    n, K, P = scheme.n, scheme.K, scheme.P
    k_over_ln_n = K / math.log(n) if n >= 2 else None
    k2_over_p = K * K / P
    kn_over_p = K * n / P
    r = geo.r if geo is not None and geo.disk_model else None

    advisory = LambdaAdvisory(k_over_ln_n=k_over_ln_n, k2_over_p=k2_over_p, kn_over_p=kn_over_p, r=r,
                              k_over_ln_n_ok=None if k_over_ln_n is None else k_over_ln_n >= thresholds.k_over_ln_n,
                              k2_over_p_ok=k2_over_p <= thresholds.k2_over_p,
                              kn_over_p_ok=kn_over_p <= thresholds.kn_over_p,
                              r_ok=None if r is None else r <= thresholds.r)
    if advisory.k_over_ln_n_ok is False:
        logger.warning("K/ln n = %.4g below %.4g: K = ω(ln n) is doubtful", k_over_ln_n, thresholds.k_over_ln_n)
    if not advisory.k2_over_p_ok:
        logger.warning("K^2/P = %.4g above %.4g: K = o(√P) is doubtful", k2_over_p, thresholds.k2_over_p)
    if not advisory.kn_over_p_ok:
        logger.warning("K n/P = %.4g above %.4g: K = o(P/n) is doubtful", kn_over_p, thresholds.kn_over_p)
    if advisory.r_ok is False:
        logger.warning("r = %.4g above %.4g: r = o(1) is doubtful", r, thresholds.r)
    return advisory


def expected_isolated_torus(n, p, r):
    '''
    :return: n exp(-pi r^2 p n), the asymptotic expected number of isolated nodes on the torus
    '''
    if not 0.0 <= r <= 0.5:
        raise FormulaDomainError("isolated-node law needs 0 <= r <= 1/2, got %r" % (r,))
    if not 0.0 <= p <= 1.0:
        raise FormulaDomainError("edge probability must lie in [0, 1], got %r" % (p,))
    return n * math.exp(-math.pi * r * r * p * n)


def disconnection_probability_torus(n, p, r):
    '''
    :return: 1 - exp(-lambda), the asymptotic probability that the torus network is disconnected
    '''
    return 1.0 - math.exp(-expected_isolated_torus(n, p, r))


def network_instance(setting, scheme, geo, chan, stream, slot=0, assignment=None):
    '''
    Draw one network instance from a trial stream: keys, positions of time slot `slot` and the link coins.

    :return: (assignment, placement or None, composed graph)
    '''
    if assignment is None:
        assignment = assign_keys(scheme, stream.substream(STREAM_KEYS))
    placement = None
    r = None
    if setting.disk_model:
        placement = place_nodes(scheme.n, geo, stream.substream(STREAM_PLACEMENT, slot))
        r = geo.r
    t = chan.t if setting.unreliable else 1.0
    graph = composed_graph(assignment, scheme.q, placement=placement, r=r, t=t,
                           rng=stream.substream(STREAM_CHANNEL, slot))
    return assignment, placement, graph


def _connectivity_trial(setting, scheme, geo, chan, capture, master_seed, stream_index):
    stream = RngStream(master_seed, stream_index)
    assignment, placement, graph = network_instance(setting, scheme, geo, chan, stream)
    if capture is not None:
        # imported here: attack builds on this module
        from keymesh.attack import capture as capture_nodes
        state = capture_nodes(capture, assignment, placement, stream.substream(STREAM_CAPTURE))
        survivors = np.setdiff1d(np.arange(scheme.n), state.captured)
        graph, _ = induced_subgraph(graph, survivors)
    report = components(graph)
    return report.connected, report.isolated_count, report.component_count


def check_setting(setting, geo, chan):
    if setting.disk_model and (geo is None or geo.region != setting.visibility):
        raise InvalidParameterError("disk model needs GeoParams on the %s" % setting.visibility.name)
    if setting.unreliable and chan is None:
        raise InvalidParameterError("unreliable links need ChannelParams")


def estimate_connectivity(setting, scheme, geo=None, chan=None, trials=500, master_seed=0, capture=None,
                          first_stream=0, pool=None):
    '''
    Monte Carlo probability that the composed topology is connected. Trial i draws everything from
    stream (master_seed, first_stream + i).

    :param capture: optional CaptureStrategy, connectivity is then tested among the non-captured nodes
    :param pool: optional TrialPool

    :return: ConnectivityEstimate with a 95% Wilson interval
    '''
    if trials < 1:
        raise InvalidParameterError("need at least one trial, got %d" % trials)
    check_setting(setting, geo, chan)
    run = partial(_connectivity_trial, setting, scheme, geo, chan, capture, master_seed)
    outcomes = map_trials(run, range(first_stream, first_stream + trials), pool)

    connected = sum(1 for outcome in outcomes if outcome[0])
    isolated = sum(outcome[1] for outcome in outcomes)
    component_total = sum(outcome[2] for outcome in outcomes)
    logger.debug("%d/%d connected (K=%d P=%d q=%d)", connected, trials, scheme.K, scheme.P, scheme.q)
    return ConnectivityEstimate(estimate=Estimate.from_counts(connected, trials),
                                isolated_mean=isolated / trials,
                                components_mean=component_total / trials)
