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
from fractions import Fraction
import math

import pandas as pd
from tqdm import tqdm

from keymesh.analysis import SettingSpec, achieved_c, estimate_connectivity, lambda_condition_check
from keymesh.attack import (RandomCapture, analytic_p_compromised_tau, analytic_p_compromised_tau_exact, capture,
                            estimate_resilience, expected_p_compromised, f_of_q, optimal_q, p_compromised_brute_force,
                            required_captures, split_attack, unassailability_margin)
from keymesh.core import (ChannelParams, GeoParams, RegionKind, RngStream, SchemeParams, STREAM_PLACEMENT, assign_keys,
                          place_nodes)
from keymesh.errors import InvalidParameterError, KeymeshError
from keymesh.graphGen import (geometric_graph, key_edge_proxy, key_graph, p_q_asymptotic, p_q_exact, p_q_exact_rational,
                              rho_brute_force, rho_distribution, rho_u, rho_u_exact, shared_key_count, solve_pool_size)
from keymesh.log import get_logger
from keymesh.mobility import t_slot_curve
from keymesh.parallel import TrialPool

logger = get_logger(__name__)

DEFAULT_TRIALS = 500
MEASURES = ('connectivity', 'resilience', 'mobility')
SWEEP_VARIABLES = ('K', 'P', 'q', 'n', 'm', 'r', 't', 'T', 'target')

ESTIMATE_COLUMNS = ['estimate', 'ci_low', 'ci_high', 'trials']
MEASURE_COLUMNS = {
    'connectivity': ['isolated_mean', 'components_mean'],
    'resilience': ['tau_mean', 'analytic_tau', 'upper_bound', 'asymptotic'],
    'mobility': ['slot_rate'],
}
FIGURE_COLUMNS = {
    'con1': ['K', 'r'] + ESTIMATE_COLUMNS,
    'con2': ['K', 'n'] + ESTIMATE_COLUMNS,
    'mobility': ['T', 'K'] + ESTIMATE_COLUMNS,
    'res': ['q', 'm', 'P'] + ESTIMATE_COLUMNS + ['analytic'],
    'res2': ['q', 'target', 'P', 'm'] + ESTIMATE_COLUMNS,
    'res3': ['m', 'q'] + ESTIMATE_COLUMNS + ['analytic'],
}
PQ_COLUMNS = ['K', 'P', 'q', 'p_q_exact', 'p_q_asymptotic']
SPLIT_COLUMNS = ['trial', 'captured', 'chunk_a', 'chunk_b', 'cross_edges']
DESIGN_COLUMNS = ['n', 'q', 'K', 'P', 'r', 'achieved_c', 'threshold', 'satisfied', 'unassailability_margin',
                  'radius_capped']
SELFTEST_COLUMNS = ['check', 'status', 'detail']

FLOAT_FORMAT = '%.10g'

# sweep defaults for the figure presets, the captions leave them open
PRESET_RANGES = {
    'con1': list(range(20, 61, 5)),
    'con2': list(range(20, 61, 5)),
    'mobility': list(range(1, 11)),
    'res': list(range(1, 6)),
    'res2': list(range(1, 6)),
    'res3': list(range(0, 61, 5)),
}
# node count used by the resilience presets, their captions give none
RESILIENCE_PRESET_N = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    '''
    One experiment: a base network, the variable swept over `sweep_values` and optionally a series variable that
    yields one curve per value. Points of every series share the trial streams of their sweep index.

    pool_from_pq holds p_q fixed: P is solved for every (K, q) of the sweep.
    '''
    setting: SettingSpec
    scheme: SchemeParams
    sweep_variable: str
    sweep_values: tuple
    geo: GeoParams = None
    chan: ChannelParams = None
    capture: RandomCapture = None
    measure: str = 'connectivity'
    series_variable: str = None
    series_values: tuple = (None,)
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    pool_from_pq: float = None
    figure: str = None

    def __post_init__(self):
        object.__setattr__(self, 'sweep_values', tuple(self.sweep_values))
        object.__setattr__(self, 'series_values', tuple(self.series_values))
        if self.measure not in MEASURES:
            raise InvalidParameterError("unknown measure '%s', choose between %s" % (self.measure, ", ".join(MEASURES)))
        if self.trials < 1:
            raise InvalidParameterError("need at least one trial, got %d" % self.trials)
        if not self.sweep_values:
            raise InvalidParameterError("sweep needs at least one value")
        for variable in (self.sweep_variable, self.series_variable):
            if variable is not None:
                self._check_variable(variable)
        if self.series_variable is None and self.series_values != (None,):
            raise InvalidParameterError("series values given without a series variable")
        if self.measure == 'mobility' and self.sweep_variable != 'T':
            raise InvalidParameterError("mobility experiments sweep the slot count T")
        if self.setting.disk_model and self.geo is None:
            raise InvalidParameterError("disk model needs a transmission radius")
        if self.setting.unreliable and self.chan is None:
            raise InvalidParameterError("unreliable links need a link-active probability")

    def _check_variable(self, variable):
        if variable not in SWEEP_VARIABLES:
            raise InvalidParameterError("cannot sweep '%s', choose between %s" % (variable, ", ".join(SWEEP_VARIABLES)))
        if variable == 't' and not self.setting.unreliable:
            raise InvalidParameterError("sweeping t needs unreliable links")
        if variable == 'r' and not self.setting.disk_model:
            raise InvalidParameterError("sweeping r needs the disk model")
        if variable == 'T' and not (self.setting.mobile and self.measure == 'mobility'):
            raise InvalidParameterError("sweeping T needs a mobile setting and the mobility measure")
        if variable == 'target' and self.measure != 'resilience':
            raise InvalidParameterError("sweeping a p_compromised target needs the resilience measure")
        if variable == 'P' and self.pool_from_pq is not None:
            raise InvalidParameterError("P is solved from p_q and cannot be swept")
        if variable == 'm' and self.measure == 'mobility':
            raise InvalidParameterError("node capture is not simulated across time slots")

    def columns(self):
        if self.figure is not None:
            return list(FIGURE_COLUMNS[self.figure])
        leading = [self.sweep_variable] + ([self.series_variable] if self.series_variable else [])
        return leading + ESTIMATE_COLUMNS + MEASURE_COLUMNS[self.measure]


@dataclass(frozen=True)
class SweepPoint:
    '''
    Fully resolved parameters of one (series, sweep) pair
    '''
    keys: dict
    scheme: SchemeParams
    geo: GeoParams
    chan: ChannelParams
    capture: RandomCapture
    sweep_index: int
    T: int = None


@dataclass(frozen=True)
class SweepRecord:
    keys: dict
    estimate: float
    ci_low: float
    ci_high: float
    trials: int
    aux: dict = field(default_factory=dict)

    @classmethod
    def from_estimate(cls, keys, estimate, trials, aux):
        if estimate is None:
            return cls(keys, math.nan, math.nan, math.nan, trials, aux)
        return cls(keys, estimate.value, estimate.ci_low, estimate.ci_high, trials, aux)

    def row(self):
        row = dict(self.keys)
        row.update(estimate=self.estimate, ci_low=self.ci_low, ci_high=self.ci_high, trials=self.trials)
        row.update(self.aux)
        return row


def resolve_point(config, series_value, value, sweep_index):
    '''
    Apply the series and sweep values to the base parameters of the experiment.

    :return: SweepPoint
    '''
    scheme = {'n': config.scheme.n, 'K': config.scheme.K, 'P': config.scheme.P, 'q': config.scheme.q}
    geo, chan, strategy, T, target = config.geo, config.chan, config.capture, None, None
    keys = {}

    for variable, setting in ((config.series_variable, series_value), (config.sweep_variable, value)):
        if variable is None:
            continue
        keys[variable] = setting
        if variable in scheme:
            scheme[variable] = setting
        elif variable == 'r':
            geo = geo.replace(r=setting)
        elif variable == 't':
            chan = ChannelParams(setting)
        elif variable == 'm':
            strategy = RandomCapture(setting)
        elif variable == 'T':
            T = setting
        elif variable == 'target':
            target = setting

    if config.pool_from_pq is not None:
        scheme['P'] = solve_pool_size(scheme['K'], scheme['q'], config.pool_from_pq)
    resolved = SchemeParams(**scheme)
    if target is not None:
        strategy = RandomCapture(required_captures(resolved, target))
    keys.setdefault('P', resolved.P)
    keys.setdefault('n', resolved.n)
    keys.setdefault('K', resolved.K)
    keys.setdefault('q', resolved.q)
    if strategy is not None:
        keys.setdefault('m', strategy.m)
    if config.measure == 'resilience' and strategy is None:
        raise InvalidParameterError("resilience experiments need a capture strategy")
    return SweepPoint(keys=keys, scheme=resolved, geo=geo, chan=chan, capture=strategy, sweep_index=sweep_index, T=T)


def plan_sweep(config):
    '''
    Resolve every point before any trial runs, so an invalid combination fails fast.

    :return: list of SweepPoint, series-major, sweep order inside a series
    '''
    return [resolve_point(config, series_value, value, index)
            for series_value in config.series_values
            for index, value in enumerate(config.sweep_values)]


def _measure_point(config, point, pool):
    first_stream = point.sweep_index * config.trials
    if config.measure == 'connectivity':
        result = estimate_connectivity(config.setting, point.scheme, point.geo, point.chan, config.trials,
                                       config.master_seed, capture=point.capture, first_stream=first_stream, pool=pool)
        aux = {'isolated_mean': result.isolated_mean, 'components_mean': result.components_mean}
        return SweepRecord.from_estimate(point.keys, result.estimate, config.trials, aux)

    result = estimate_resilience(config.setting, point.scheme, point.geo, point.chan, point.capture, config.trials,
                                 config.master_seed, first_stream=first_stream, pool=pool)
    aux = {'tau_mean': result.tau_mean, 'analytic_tau': result.analytic_tau, 'upper_bound': result.upper_bound,
           'asymptotic': result.asymptotic}
    if 'analytic' in config.columns():
        aux['analytic'] = expected_p_compromised(point.scheme, point.capture.m)
    return SweepRecord.from_estimate(point.keys, result.estimate, config.trials, aux)


def _mobility_series(config, points, pool):
    # one set of T_max-slot runs per series, every T is read off the same runs
    first = points[0]
    T_max = max(point.T for point in points)
    curve = t_slot_curve(first.scheme, first.geo, first.chan, config.setting, T_max, config.trials,
                         config.master_seed, pool=pool)
    return [SweepRecord.from_estimate(point.keys, curve[point.T - 1].estimate, config.trials,
                                      {'slot_rate': curve[point.T - 1].slot_rate})
            for point in points]


def run_sweep(config, pool=None, progress=False):
    '''
    Run every point of an experiment. Point k of a series uses the trial streams
    (master_seed, k * trials + i), i < trials, so the output depends on nothing but the config.

    :param config: ExperimentConfig
    :param pool: optional TrialPool, one is opened (KEYMESH_THREADS workers) when missing
    :param progress: [bool] show a progress bar on stderr

    :return: list of SweepRecord in series-major, sweep order
    '''
    points = plan_sweep(config)
    lambda_condition_check(points[0].scheme, points[0].geo)
    if pool is None:
        with TrialPool() as own_pool:
            return run_sweep(config, own_pool, progress)

    records = []
    if config.measure == 'mobility':
        per_series = len(config.sweep_values)
        for start in tqdm(range(0, len(points), per_series), desc='series', disable=not progress, leave=False):
            records.extend(_mobility_series(config, points[start:start + per_series], pool))
        return records

    for point in tqdm(points, desc=config.figure or config.measure, disable=not progress, leave=False):
        records.append(_measure_point(config, point, pool))
        logger.debug("%s -> %.4g", point.keys, records[-1].estimate)
    return records


def figure_preset(figure, values=None, trials=DEFAULT_TRIALS, master_seed=0):
    '''
    :param figure: one of con1, con2, mobility, res, res2, res3
    :param values: sweep values overriding the preset range

    :return: ExperimentConfig reproducing the figure
    '''
    if figure not in FIGURE_COLUMNS:
        raise InvalidParameterError("unknown figure '%s', choose between %s" % (figure, ", ".join(FIGURE_COLUMNS)))
    values = PRESET_RANGES[figure] if values is None else list(values)
    common = {'trials': trials, 'master_seed': master_seed, 'figure': figure, 'sweep_values': values}
    torus = RegionKind.UnitTorus
    full = SettingSpec(RegionKind.FullVisibility)

    if figure == 'con1':
        return ExperimentConfig(setting=SettingSpec(torus), scheme=SchemeParams(2000, 20, 5000, 2),
                                geo=GeoParams(torus, 0.2), sweep_variable='K',
                                series_variable='r', series_values=(0.2, 0.3), **common)
    if figure == 'con2':
        return ExperimentConfig(setting=SettingSpec(torus, unreliable=True), scheme=SchemeParams(1000, 20, 5000, 2),
                                geo=GeoParams(torus, 0.3), chan=ChannelParams(0.9), capture=RandomCapture(10),
                                sweep_variable='K', series_variable='n', series_values=(1000, 900, 800), **common)
    if figure == 'mobility':
        square = RegionKind.UnitSquare
        return ExperimentConfig(setting=SettingSpec(square, mobile=True), scheme=SchemeParams(1000, 44, 6000, 2),
                                geo=GeoParams(square, 0.25), measure='mobility', sweep_variable='T',
                                series_variable='K', series_values=(44, 50, 60), **common)
    if figure == 'res':
        return ExperimentConfig(setting=full, scheme=SchemeParams(RESILIENCE_PRESET_N, 40, 40, 1),
                                capture=RandomCapture(15), measure='resilience', sweep_variable='q',
                                series_variable='m', series_values=(15, 40), pool_from_pq=0.1, **common)
    if figure == 'res2':
        return ExperimentConfig(setting=full, scheme=SchemeParams(RESILIENCE_PRESET_N, 40, 40, 1),
                                capture=RandomCapture(0), measure='resilience', sweep_variable='q',
                                series_variable='target', series_values=(0.03, 0.1), pool_from_pq=0.1, **common)
    return ExperimentConfig(setting=full, scheme=SchemeParams(RESILIENCE_PRESET_N, 50, 10000, 2),
                            capture=RandomCapture(0), measure='resilience', sweep_variable='m',
                            series_variable='q', series_values=(2, 3), **common)


@dataclass(frozen=True)
class DesignResult:
    n: int
    q: int
    K: int
    P: int
    r: float
    achieved_c: float
    threshold: float
    satisfied: bool
    unassailability_margin: float
    radius_capped: bool

    def row(self):
        return {name: getattr(self, name) for name in DESIGN_COLUMNS}


def design_guidelines(n, q, c, c1, eps1, c2, eps2):
    '''
    K = ceil(c1 (ln n)^(1+eps1)), P = ceil(c2 n (ln n)^(1+eps2)) and the smallest torus radius giving
    pi r^2 (1/q!) K^(2q)/P^q = c ln n / n for the rounded K and P. A radius above 1/2 is capped and reported.

    :return: DesignResult
    '''
    if n < 2:
        raise InvalidParameterError("design needs n >= 2, got %d" % n)
    if not c > 1.0:
        raise InvalidParameterError("design needs c > 1, got %r" % (c,))
    if not 0.0 < eps1 < eps2:
        raise InvalidParameterError("design needs 0 < eps1 < eps2, got eps1=%r eps2=%r" % (eps1, eps2))
    if not (c1 > 0 and c2 > 0):
        raise InvalidParameterError("design needs c1, c2 > 0")

    log_n = math.log(n)
    K = math.ceil(c1 * log_n ** (1.0 + eps1))
    P = math.ceil(c2 * n * log_n ** (1.0 + eps2))
    scheme = SchemeParams(n, K, P, q)
    r = math.sqrt(c * log_n / (n * key_edge_proxy(K, P, q) * math.pi))
    capped = r > 0.5
    if capped:
        logger.warning("radius %.4g needed for c=%g exceeds 1/2, capping it", r, c)
        r = 0.5

    torus = RegionKind.UnitTorus
    check = achieved_c(SettingSpec(torus), scheme, GeoParams(torus, r))
    margin = unassailability_margin(n, K, P)
    return DesignResult(n=n, q=q, K=K, P=P, r=r, achieved_c=check.achieved_c, threshold=check.threshold,
                        satisfied=check.satisfied, unassailability_margin=margin, radius_capped=capped)


def run_split(region, n, r, ell, trials, master_seed=0):
    '''
    Band attack on `trials` independent placements, trial i placed from stream (master_seed, i).

    :return: list of row dicts (trial, captured, chunk_a, chunk_b, cross_edges)
    '''
    geo = GeoParams(region, r)
    rows = []
    for trial in range(trials):
        placement = place_nodes(n, geo, RngStream(master_seed, trial).substream(STREAM_PLACEMENT, 0))
        result = split_attack(placement, r, ell)
        chunk_a, chunk_b = result.sizes
        rows.append({'trial': trial, 'captured': int(result.captured.size), 'chunk_a': chunk_a, 'chunk_b': chunk_b,
                     'cross_edges': result.cross_edges})
    return rows


def pq_rows(Ks, Ps, qs):
    '''
    :return: one row per valid (K, P, q) combination with p_q exact and asymptotic
    '''
    rows = []
    for K in Ks:
        for P in Ps:
            for q in qs:
                scheme = SchemeParams(1, K, P, q)
                rows.append({'K': K, 'P': P, 'q': q, 'p_q_exact': p_q_exact(scheme),
                             'p_q_asymptotic': p_q_asymptotic(scheme)})
    return rows


def _check_rho_oracle():
    checked = 0
    for K in range(1, 5):
        for P in range(K, 11):
            scheme = SchemeParams(1, K, P, 1)
            for u in range(K + 1):
                exact = rho_brute_force(scheme, u)
                if rho_u_exact(scheme, u) != exact or abs(rho_u(scheme, u) - float(exact)) > 1e-12:
                    return False, "rho_%d differs from enumeration at K=%d P=%d" % (u, K, P)
                checked += 1
    return True, "%d (K, P, u) triples" % checked


def _check_rho_sums():
    generator = RngStream(0, 0).generator()
    worst = 0.0
    for _ in range(200):
        K = int(generator.integers(1, 65))
        P = int(generator.integers(K, 10 ** 5 + 1))
        worst = max(worst, abs(math.fsum(rho_distribution(SchemeParams(1, K, P, 1))) - 1.0))
    return worst <= 1e-12, "max |sum rho - 1| = %.3g" % worst


def _check_small_pq():
    scheme = SchemeParams(1, 2, 4, 1)
    exact = p_q_exact_rational(scheme)
    ok = exact == Fraction(5, 6) and abs(p_q_exact(scheme) - 5.0 / 6.0) <= 1e-14 and solve_pool_size(2, 1, 5 / 6) == 4
    return ok, "p_1(K=2, P=4) = %s" % exact


def _check_compromise_formula():
    scheme = SchemeParams(1, 2, 4, 1)
    exact = analytic_p_compromised_tau_exact(scheme, 2)
    ok = exact == Fraction(13, 30) == p_compromised_brute_force(scheme, 2)
    ok = ok and abs(analytic_p_compromised_tau(scheme, 2) - 13.0 / 30.0) <= 1e-12
    for K, P, q in ((2, 6, 1), (3, 9, 2), (4, 40, 2), (10, 200, 3)):
        grid = SchemeParams(1, K, P, q)
        values = [analytic_p_compromised_tau(grid, tau) for tau in range(P + 1)]
        ok = ok and values[-1] == 1.0 and all(b >= a - 1e-15 for a, b in zip(values, values[1:]))
        ok = ok and all(value <= (tau / (P - K)) ** q + 1e-12 for tau, value in enumerate(values) if tau <= P - K)
    return ok, "p_compromised(K=2, P=4, q=1, tau=2) = %s" % exact


def _check_optimal_q():
    for m in range(1, 61):
        for K in range(1, 61):
            # q! m^q K^(K-q) orders f_of_q exactly
            scaled = [math.factorial(q) * m ** q * K ** (K - q) for q in range(1, K + 1)]
            best = min(scaled)
            argmin = frozenset(q for q, value in zip(range(1, K + 1), scaled) if value == best)
            if argmin != optimal_q(m, K):
                return False, "optimal_q(%d, %d) = %s, argmin %s" % (m, K, sorted(optimal_q(m, K)), sorted(argmin))
    ratio_ok = all(abs(f_of_q(q + 1, 15, 40) / f_of_q(q, 15, 40) - 15 * (q + 1) / 40) <= 1e-12 for q in range(1, 10))
    return ratio_ok, "1 <= m, K <= 60"


def _check_key_graph():
    scheme = SchemeParams(60, 8, 120, 2)
    assignment = assign_keys(scheme, RngStream(0, 0))
    graph = key_graph(assignment, scheme.q)
    expected = {(i, j) for i in range(scheme.n) for j in range(i + 1, scheme.n)
                if shared_key_count(assignment, i, j) >= scheme.q}
    found = {(int(i), int(j)) for i, j in graph.edges}
    state = capture(RandomCapture(7), assignment, rng=RngStream(0, 0).substream(3))
    union = set().union(*(set(assignment.ring(i).tolist()) for i in state.captured))
    ok = expected == found and union == set(state.compromised_keys.tolist())
    return ok, "%d key-graph edges" % len(found)


def _check_geometric_graph():
    for region in (RegionKind.UnitTorus, RegionKind.UnitSquare):
        geo = GeoParams(region, 0.07)
        placement = place_nodes(500, geo, RngStream(0, 0).substream(STREAM_PLACEMENT, 0))
        if geometric_graph(placement, geo.r) != geometric_graph(placement, geo.r, brute_force=True):
            return False, "grid search disagrees with brute force on the %s" % region.name
    return True, "torus and square, n=500"


SELFTEST_CHECKS = (
    ('rho_enumeration', _check_rho_oracle),
    ('rho_normalisation', _check_rho_sums),
    ('p_q_rational', _check_small_pq),
    ('p_compromised_formula', _check_compromise_formula),
    ('optimal_q', _check_optimal_q),
    ('key_graph', _check_key_graph),
    ('geometric_graph', _check_geometric_graph),
)


def run_selftest():
    '''
    Exact-oracle battery. Every check runs even after a failure.

    :return: list of row dicts (check, status, detail)
    '''
    rows = []
    for name, check in SELFTEST_CHECKS:
        try:
            ok, detail = check()
        except KeymeshError as error:
            ok, detail = False, "%s: %s" % (type(error).__name__, error)
        rows.append({'check': name, 'status': 'pass' if ok else 'FAIL', 'detail': detail})
        if not ok:
            logger.error("self-test %s failed: %s", name, detail)
    return rows


def records_frame(records, columns):
    '''
    :param records: SweepRecord list or row dicts
    :param columns: fixed header of the output

    :return: pandas DataFrame with exactly these columns in this order
    '''
    rows = [record.row() if hasattr(record, 'row') else record for record in records]
    return pd.DataFrame(rows, columns=columns)


def write_csv(frame, stream):
    '''
    Single header row, floats with 10 significant digits, '\\n' line ends
    '''
    frame.to_csv(stream, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
