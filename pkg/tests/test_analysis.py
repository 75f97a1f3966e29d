import logging
import math

import numpy as np
import pytest

from keymesh.analysis import (SettingSpec, achieved_c, c_pound, c_star, components, disconnection_probability_torus,
                              estimate_connectivity, expected_isolated_torus, isolated_nodes, lambda_condition_check,
                              network_instance)
from keymesh.attack import RandomCapture
from keymesh.core import ChannelParams, GeoParams, RegionKind, RngStream, SchemeParams
from keymesh.errors import FormulaDomainError, InvalidParameterError
from keymesh.graphGen import AdjacencyGraph, er_graph, key_edge_proxy
from keymesh.parallel import TrialPool

TORUS = RegionKind.UnitTorus
SQUARE = RegionKind.UnitSquare
FULL = RegionKind.FullVisibility


def test_components_examples():
    single = components(AdjacencyGraph.empty(1))
    assert single.connected and single.component_sizes == (1,) and single.isolated_count == 1

    split = components(AdjacencyGraph.empty(2))
    assert not split.connected and split.component_sizes == (1, 1) and split.isolated_count == 2

    path = components(AdjacencyGraph.from_pairs(3, [0, 1], [1, 2]))
    assert path.connected and path.component_sizes == (3,) and path.isolated_count == 0

    mixed = components(AdjacencyGraph.from_pairs(6, [0, 1, 3], [1, 2, 4]))
    assert mixed.component_sizes == (3, 2, 1) and mixed.component_count == 3 and mixed.isolated_count == 1


def test_components_empty_graph():
    with pytest.raises(InvalidParameterError):
        components(AdjacencyGraph.empty(0))


def test_components_match_networkx():
    nx = pytest.importorskip('networkx')
    graph = er_graph(400, 0.004, RngStream(2, 0))
    reference = nx.Graph()
    reference.add_nodes_from(range(graph.n))
    reference.add_edges_from(graph.edges.tolist())
    expected = sorted((len(part) for part in nx.connected_components(reference)), reverse=True)
    report = components(graph)
    assert list(report.component_sizes) == expected
    assert sum(report.component_sizes) == graph.n
    assert report.isolated_count == len(list(nx.isolates(reference)))


def test_isolated_nodes():
    graph = AdjacencyGraph.from_pairs(5, [0, 1], [1, 3])
    np.testing.assert_array_equal(isolated_nodes(graph), [2, 4])


def test_setting_spec():
    assert SettingSpec(TORUS, unreliable=True, mobile=True).disk_model
    assert not SettingSpec(FULL).disk_model
    with pytest.raises(InvalidParameterError):
        SettingSpec(FULL, unreliable=True)
    with pytest.raises(InvalidParameterError):
        SettingSpec(FULL, mobile=True)


def test_c_star_examples():
    assert c_star(math.exp(10), 1, math.exp(2)) == pytest.approx(1.2)
    assert c_star(math.exp(10), 1, math.exp(5)) == pytest.approx(2.0)
    assert c_star(1000, 30, 900) == pytest.approx(1.0)


def test_c_pound_examples():
    assert c_pound(math.exp(10), 1, math.exp(2), math.exp(-1), 2) == pytest.approx(2.0)
    assert c_pound(math.exp(10), 1, 1, math.exp(-1), 3) == pytest.approx(1.1)
    assert c_pound(5000, 40, 9000, 1.0, 1) == c_star(5000, 40, 9000)


def test_threshold_domain():
    with pytest.raises(FormulaDomainError):
        c_star(1, 2, 10)
    with pytest.raises(FormulaDomainError):
        c_pound(100, 2, 10, 0.0, 1)


def test_achieved_c_full_visibility():
    scheme = SchemeParams(1000, 10, 7238, 1)
    check = achieved_c(SettingSpec(FULL), scheme)
    assert check.achieved_c == pytest.approx(2.0, rel=1e-4)
    assert check.threshold == 1.0 and check.satisfied and check.effective_n == 1000


def test_achieved_c_torus_below_threshold():
    scheme = SchemeParams(5000, 20, 20000, 1)
    r = math.sqrt(0.5 * math.log(5000) / (5000 * key_edge_proxy(20, 20000, 1) * math.pi))
    check = achieved_c(SettingSpec(TORUS), scheme, GeoParams(TORUS, r))
    assert check.achieved_c == pytest.approx(0.5)
    assert not check.satisfied


def test_achieved_c_square_threshold():
    n = 22026
    scheme = SchemeParams(n, 10, 739, 1)
    r = math.sqrt(1.3 * math.log(n) / (n * key_edge_proxy(10, 739, 1) * math.pi))
    check = achieved_c(SettingSpec(SQUARE), scheme, GeoParams(SQUARE, r))
    assert check.threshold == pytest.approx(1.2, abs=1e-3)
    assert check.achieved_c == pytest.approx(1.3)
    assert check.satisfied

    unreliable = achieved_c(SettingSpec(SQUARE, unreliable=True), scheme, GeoParams(SQUARE, r), ChannelParams(0.5))
    assert unreliable.achieved_c == pytest.approx(0.65)
    assert unreliable.threshold == pytest.approx(c_pound(n, 10, 739, 0.5, 1))


def test_achieved_c_uses_surviving_nodes():
    scheme = SchemeParams(1000, 10, 7238, 1)
    check = achieved_c(SettingSpec(FULL), scheme, captured=100)
    assert check.effective_n == 900
    assert check.achieved_c == pytest.approx(key_edge_proxy(10, 7238, 1) * 900 / math.log(900))
    with pytest.raises(InvalidParameterError):
        achieved_c(SettingSpec(FULL), scheme, captured=999)


def test_achieved_c_needs_geometry():
    scheme = SchemeParams(1000, 10, 7238, 1)
    with pytest.raises(InvalidParameterError):
        achieved_c(SettingSpec(TORUS), scheme)
    with pytest.raises(InvalidParameterError):
        achieved_c(SettingSpec(TORUS, unreliable=True), scheme, GeoParams(TORUS, 0.1))


def test_lambda_check_flags(caplog):
    with caplog.at_level(logging.WARNING, logger='keymesh'):
        advisory = lambda_condition_check(SchemeParams(2000, 40, 5000, 2))
    assert advisory.k_over_ln_n == pytest.approx(40 / math.log(2000))
    assert advisory.k_over_ln_n_ok
    assert not advisory.k2_over_p_ok
    assert not advisory.kn_over_p_ok
    assert advisory.r_ok is None
    assert not advisory.passed
    assert "K^2/P" in caplog.text


def test_lambda_check_passes(caplog):
    with caplog.at_level(logging.WARNING, logger='keymesh'):
        advisory = lambda_condition_check(SchemeParams(1000, 60, 10 ** 6, 2), GeoParams(TORUS, 0.1))
    assert advisory.passed and advisory.r_ok
    assert caplog.text == ""


def test_lambda_check_whole_pool():
    assert not lambda_condition_check(SchemeParams(1000, 50, 50, 1)).k2_over_p_ok


def test_lambda_check_single_node(caplog):
    with caplog.at_level(logging.WARNING, logger='keymesh'):
        advisory = lambda_condition_check(SchemeParams(1, 2, 4, 1), GeoParams(TORUS, 0.1))
    assert advisory.k_over_ln_n is None and advisory.k_over_ln_n_ok is None
    assert advisory.kn_over_p == pytest.approx(0.5)
    assert "ln n" not in caplog.text


def test_expected_isolated_torus():
    n = 5000
    r = math.sqrt(math.log(n) / (math.pi * n))
    assert expected_isolated_torus(n, 1.0, r) == pytest.approx(1.0)
    assert expected_isolated_torus(n, 0.0, r) == n
    r = math.sqrt((math.log(n) + 1) / (math.pi * n))
    assert expected_isolated_torus(n, 1.0, r) == pytest.approx(1 / math.e)
    assert disconnection_probability_torus(n, 1.0, r) == pytest.approx(1 - math.exp(-1 / math.e))
    with pytest.raises(FormulaDomainError):
        expected_isolated_torus(n, 1.0, 0.6)


def test_network_instance_is_reproducible():
    setting = SettingSpec(TORUS, unreliable=True)
    scheme = SchemeParams(200, 8, 100, 2)
    geo, chan = GeoParams(TORUS, 0.2), ChannelParams(0.7)
    _, first_placement, first = network_instance(setting, scheme, geo, chan, RngStream(4, 2))
    _, second_placement, second = network_instance(setting, scheme, geo, chan, RngStream(4, 2))
    assert first == second
    np.testing.assert_array_equal(first_placement.coords, second_placement.coords)
    _, _, other_slot = network_instance(setting, scheme, geo, chan, RngStream(4, 2), slot=1)
    assert other_slot != first


def test_connectivity_whole_pool_full_visibility():
    result = estimate_connectivity(SettingSpec(FULL), SchemeParams(50, 10, 10, 1), trials=20, master_seed=3)
    assert result.estimate.value == 1.0 and result.estimate.ci_high == 1.0
    assert result.isolated_mean == 0.0 and result.components_mean == 1.0


def test_connectivity_after_capture():
    result = estimate_connectivity(SettingSpec(FULL), SchemeParams(50, 10, 10, 1), trials=10,
                                   capture=RandomCapture(10))
    assert result.estimate.value == 1.0


def test_connectivity_tiny_radius_fails():
    setting = SettingSpec(TORUS)
    result = estimate_connectivity(setting, SchemeParams(200, 5, 5, 1), GeoParams(TORUS, 0.01), trials=10)
    assert result.estimate.value == 0.0
    assert result.isolated_mean > 100


def test_connectivity_is_deterministic():
    setting = SettingSpec(TORUS, unreliable=True)
    args = (setting, SchemeParams(150, 8, 120, 1), GeoParams(TORUS, 0.25), ChannelParams(0.8))
    first = estimate_connectivity(*args, trials=30, master_seed=11)
    second = estimate_connectivity(*args, trials=30, master_seed=11)
    assert first == second
    with TrialPool(2) as pool:
        assert estimate_connectivity(*args, trials=30, master_seed=11, pool=pool) == first


def test_connectivity_rejects_missing_geometry():
    with pytest.raises(InvalidParameterError):
        estimate_connectivity(SettingSpec(TORUS), SchemeParams(10, 2, 4, 1), trials=1)
    with pytest.raises(InvalidParameterError):
        estimate_connectivity(SettingSpec(FULL), SchemeParams(10, 2, 4, 1), trials=0)


def _torus_radius(n, K, P, c):
    return math.sqrt(c * math.log(n) / (n * key_edge_proxy(K, P, 1) * math.pi))


@pytest.mark.slow
def test_connectivity_threshold_behaviour():
    n, K, P = 2000, 20, 20000
    setting, scheme = SettingSpec(TORUS), SchemeParams(n, K, P, 1)
    above = estimate_connectivity(setting, scheme, GeoParams(TORUS, _torus_radius(n, K, P, 2.0)), trials=100,
                                  master_seed=1)
    below = estimate_connectivity(setting, scheme, GeoParams(TORUS, _torus_radius(n, K, P, 0.5)), trials=100,
                                  master_seed=1)
    assert above.estimate.value >= 0.9
    assert below.estimate.value <= 0.5


@pytest.mark.slow
@pytest.mark.parametrize('expected', [0.5, 1.0, 2.0, 5.0])
def test_isolated_node_law_on_torus(expected):
    # K = P = 1 makes the key graph complete, the topology is then RGG thinned by ER(t)
    n, t, trials = 2000, 0.2, 2000
    r = math.sqrt(math.log(n / expected) / (math.pi * t * n))
    assert expected_isolated_torus(n, t, r) == pytest.approx(expected)
    result = estimate_connectivity(SettingSpec(TORUS, unreliable=True), SchemeParams(n, 1, 1, 1),
                                   GeoParams(TORUS, r), ChannelParams(t), trials=trials, master_seed=5)
    assert result.isolated_mean == pytest.approx(expected, rel=0.10)
    disconnected = 1.0 - result.estimate.value
    assert disconnected == pytest.approx(disconnection_probability_torus(n, t, r), abs=0.05)
