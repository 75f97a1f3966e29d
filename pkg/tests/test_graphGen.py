import io
import math
from fractions import Fraction

import numpy as np
import pytest

from keymesh.core import (GeoParams, KeyAssignment, Placement, RegionKind, RngStream, SchemeParams, assign_keys,
                          place_nodes)
from keymesh.errors import EnumerationGuardError, FormulaDomainError, InvalidParameterError, UnattainableTargetError
from keymesh.graphGen import (AdjacencyGraph, composed_graph, er_graph, geometric_graph, induced_subgraph,
                              intersect_graphs, key_graph, mu_region, p_q_asymptotic, p_q_exact, p_q_exact_rational,
                              read_edge_list, rho_brute_force, rho_distribution, rho_u, rho_u_exact, shared_key_count,
                              shared_key_counts, solve_pool_size, write_edge_list)

TORUS = RegionKind.UnitTorus
SQUARE = RegionKind.UnitSquare


def _pairs(graph):
    return {(int(i), int(j)) for i, j in graph.edges}


def test_from_pairs_merges_duplicates():
    graph = AdjacencyGraph.from_pairs(4, [0, 2, 1, 3], [1, 1, 0, 2])
    assert _pairs(graph) == {(0, 1), (1, 2), (2, 3)}
    assert graph.edge_count == 3
    assert graph.has_edge(2, 1) and not graph.has_edge(0, 3) and not graph.has_edge(1, 1)
    np.testing.assert_array_equal(graph.degrees(), [1, 2, 2, 1])
    np.testing.assert_array_equal(graph.neighbors(1), [0, 2])


def test_from_pairs_rejects_bad_edges():
    with pytest.raises(InvalidParameterError):
        AdjacencyGraph.from_pairs(3, [0], [0])
    with pytest.raises(InvalidParameterError):
        AdjacencyGraph.from_pairs(3, [0], [3])


def test_complete_and_empty():
    assert AdjacencyGraph.complete(5).edge_count == 10
    assert AdjacencyGraph.complete(5).density() == 1.0
    assert AdjacencyGraph.empty(5).edge_count == 0
    assert AdjacencyGraph.complete(1).edge_count == 0


def test_shared_key_count_examples():
    assignment = KeyAssignment(np.array([[0, 1, 5], [1, 5, 7], [0, 1, 2], [0, 1, 2]]), 8)
    assert shared_key_count(assignment, 0, 1) == 2
    assert shared_key_count(assignment, 2, 3) == 3
    with pytest.raises(InvalidParameterError):
        shared_key_count(assignment, 1, 1)
    with pytest.raises(InvalidParameterError):
        shared_key_count(assignment, 0, 4)


def test_shared_key_counts_match_pairwise(small_scheme, stream):
    assignment = assign_keys(small_scheme, stream)
    first, second = np.triu_indices(small_scheme.n, 1)
    counts = shared_key_counts(assignment, first, second)
    expected = [shared_key_count(assignment, int(i), int(j)) for i, j in zip(first, second)]
    np.testing.assert_array_equal(counts, expected)


def test_key_graph_whole_pool_is_complete():
    assignment = assign_keys(SchemeParams(12, 4, 4, 3), RngStream(0, 0))
    assert key_graph(assignment, 3) == AdjacencyGraph.complete(12)


def test_key_graph_disjoint_rings_is_empty():
    assignment = KeyAssignment(np.array([[0, 1], [2, 3], [4, 5]]), 6)
    assert key_graph(assignment, 2).edge_count == 0


def test_key_graph_matches_pairwise(small_scheme, stream):
    assignment = assign_keys(small_scheme, stream)
    graph = key_graph(assignment, small_scheme.q)
    expected = {(i, j) for i in range(small_scheme.n) for j in range(i + 1, small_scheme.n)
                if shared_key_count(assignment, i, j) >= small_scheme.q}
    assert _pairs(graph) == expected


def test_key_graph_shrinks_as_q_grows(small_scheme, stream):
    assignment = assign_keys(small_scheme, stream)
    graphs = [_pairs(key_graph(assignment, q)) for q in range(1, small_scheme.K + 2)]
    assert all(larger <= smaller for smaller, larger in zip(graphs, graphs[1:]))
    assert len(graphs[0]) > len(graphs[2]) and not graphs[-1]


def test_key_graph_follows_relabelling(small_scheme, stream):
    assignment = assign_keys(small_scheme, stream)
    order = np.random.default_rng(3).permutation(small_scheme.n)
    relabelled = KeyAssignment(assignment.rings[order], assignment.pool_size)
    # new node i carries the ring of old node order[i]
    moved = {tuple(sorted((int(order[i]), int(order[j])))) for i, j in key_graph(relabelled, small_scheme.q).edges}
    assert moved == _pairs(key_graph(assignment, small_scheme.q))


@pytest.mark.slow
def test_key_graph_edge_density():
    scheme, trials = SchemeParams(2000, 40, 5000, 2), 20
    p = p_q_exact(scheme)
    densities = [key_graph(assign_keys(scheme, RngStream(12, trial)), scheme.q).density() for trial in range(trials)]
    # edges sharing a node are independent, the edge count has variance N p (1 - p)
    standard_error = math.sqrt(p * (1 - p) / (scheme.n * (scheme.n - 1) / 2) / trials)
    assert abs(np.mean(densities) - p) <= 4 * standard_error


def test_geometric_graph_wraps_on_torus():
    coords = np.array([[0.02, 0.5], [0.97, 0.5]])
    assert geometric_graph(Placement(TORUS, coords), 0.1).edge_count == 1
    assert geometric_graph(Placement(SQUARE, coords), 0.1).edge_count == 0


def test_geometric_graph_large_radius_is_complete():
    placement = place_nodes(40, GeoParams(SQUARE, 1.5), RngStream(0, 0))
    assert geometric_graph(placement, math.sqrt(2)) == AdjacencyGraph.complete(40)


@pytest.mark.parametrize('region', [TORUS, SQUARE])
def test_geometric_graph_grows_with_radius(region):
    placement = place_nodes(300, GeoParams(region, 0.3), RngStream(6, 0))
    graphs = [_pairs(geometric_graph(placement, r)) for r in (0.02, 0.05, 0.1, 0.2, 0.3)]
    assert all(smaller <= larger for smaller, larger in zip(graphs, graphs[1:]))
    assert len(graphs[0]) < len(graphs[-1])


@pytest.mark.parametrize('region', [TORUS, SQUARE])
@pytest.mark.parametrize('r', [0.03, 0.1, 0.26, 0.4])
def test_geometric_grid_matches_brute_force(region, r):
    placement = place_nodes(700, GeoParams(region, r), RngStream(4, 1))
    assert geometric_graph(placement, r) == geometric_graph(placement, r, brute_force=True)


def test_geometric_graph_full_visibility():
    with pytest.raises(InvalidParameterError):
        geometric_graph(Placement(RegionKind.FullVisibility), 0.1)


def test_torus_edge_density():
    n, r, trials = 2000, 0.1, 10
    p = math.pi * r * r
    densities = [geometric_graph(place_nodes(n, GeoParams(TORUS, r), RngStream(8, trial)), r).density()
                 for trial in range(trials)]
    # pairs sharing a node are independent on the torus, the edge count is binomial
    standard_error = math.sqrt(p * (1 - p) / (n * (n - 1) / 2) / trials)
    assert abs(np.mean(densities) - p) <= 4 * standard_error


def test_square_edge_density_within_bounds():
    r = 0.1
    graph = geometric_graph(place_nodes(2000, GeoParams(SQUARE, r), RngStream(8, 0)), r)
    bounds = mu_region(GeoParams(SQUARE, r))
    assert bounds.lower < graph.density() < bounds.upper


def test_er_graph_extremes():
    assert er_graph(30, 0.0, RngStream(0, 0)).edge_count == 0
    assert er_graph(7, 1.0, RngStream(0, 0)) == AdjacencyGraph.complete(7)
    assert er_graph(1, 0.5, RngStream(0, 0)).edge_count == 0
    with pytest.raises(InvalidParameterError):
        er_graph(10, 1.5, RngStream(0, 0))


def test_er_graph_edge_count():
    n, p = 1000, 0.01
    pairs = n * (n - 1) // 2
    graph = er_graph(n, p, RngStream(12, 0))
    assert abs(graph.edge_count - pairs * p) <= 4 * math.sqrt(pairs * p * (1 - p))
    edges = graph.edges
    assert np.all(edges[:, 0] < edges[:, 1]) and edges.max() < n


def test_er_graph_deterministic():
    assert er_graph(200, 0.05, RngStream(3, 3)) == er_graph(200, 0.05, RngStream(3, 3))
    assert er_graph(200, 0.05, RngStream(3, 3)) != er_graph(200, 0.05, RngStream(3, 4))


def test_intersect_graphs():
    a = AdjacencyGraph.from_pairs(4, [0, 1, 2], [1, 2, 3])
    b = AdjacencyGraph.from_pairs(4, [0, 2], [1, 3])
    complete, empty = AdjacencyGraph.complete(4), AdjacencyGraph.empty(4)
    assert intersect_graphs([a, b]) == intersect_graphs([b, a]) == b
    assert intersect_graphs([a, complete]) == a
    assert intersect_graphs([a, empty]) == empty
    with pytest.raises(InvalidParameterError):
        intersect_graphs([a, AdjacencyGraph.empty(5)])


def test_induced_subgraph_relabels():
    path = AdjacencyGraph.from_pairs(5, [0, 1, 2, 3], [1, 2, 3, 4])
    sub, kept = induced_subgraph(path, [4, 0, 1, 3])
    np.testing.assert_array_equal(kept, [0, 1, 3, 4])
    assert _pairs(sub) == {(0, 1), (2, 3)}


def test_composed_graph_full_visibility_is_key_graph(small_scheme, stream):
    assignment = assign_keys(small_scheme, stream)
    assert composed_graph(assignment, small_scheme.q) == key_graph(assignment, small_scheme.q)


def test_composed_graph_is_intersection(stream):
    scheme = SchemeParams(300, 6, 60, 1)
    assignment = assign_keys(scheme, stream.substream(0))
    placement = place_nodes(scheme.n, GeoParams(TORUS, 0.2), stream.substream(1, 0))
    reliable = composed_graph(assignment, scheme.q, placement, 0.2)
    assert reliable == intersect_graphs([key_graph(assignment, scheme.q), geometric_graph(placement, 0.2)])

    thinned = composed_graph(assignment, scheme.q, placement, 0.2, t=0.5, rng=stream.substream(2, 0))
    assert _pairs(thinned) <= _pairs(reliable)
    share = thinned.edge_count / reliable.edge_count
    assert abs(share - 0.5) <= 4 * math.sqrt(0.25 / reliable.edge_count)
    with pytest.raises(InvalidParameterError):
        composed_graph(assignment, scheme.q, placement, 0.2, t=0.5)


def test_edge_list_dump_and_read(small_scheme, stream):
    graph = key_graph(assign_keys(small_scheme, stream), 1)
    buffer = io.StringIO()
    write_edge_list(graph, buffer)
    buffer.seek(0)
    assert read_edge_list(buffer) == graph
    with pytest.raises(InvalidParameterError):
        read_edge_list(io.StringIO("3 2\n0 1\n"))


def test_rho_small_example():
    scheme = SchemeParams(1, 2, 4, 1)
    assert [rho_u(scheme, u) for u in range(3)] == pytest.approx([1 / 6, 2 / 3, 1 / 6], abs=1e-15)
    assert [rho_u_exact(scheme, u) for u in range(3)] == [Fraction(1, 6), Fraction(2, 3), Fraction(1, 6)]


def test_rho_whole_pool():
    scheme = SchemeParams(1, 5, 5, 1)
    np.testing.assert_array_equal(rho_distribution(scheme), [0, 0, 0, 0, 0, 1])


def test_rho_impossible_overlaps_are_zero():
    # two 3-rings from 4 keys share at least 2
    scheme = SchemeParams(1, 3, 4, 1)
    assert rho_u(scheme, 0) == 0.0 and rho_u(scheme, 1) == 0.0
    assert rho_u(scheme, 2) == pytest.approx(0.75, abs=1e-15)


def test_rho_sums_to_one():
    generator = RngStream(21, 0).generator()
    for _ in range(200):
        K = int(generator.integers(1, 65))
        P = int(generator.integers(K, 10 ** 5 + 1))
        assert abs(math.fsum(rho_distribution(SchemeParams(1, K, P, 1))) - 1.0) <= 1e-12


@pytest.mark.parametrize('K, P', [(10, 100), (40, 5000), (64, 10 ** 5), (30, 61)])
def test_rho_matches_exact_binomials(K, P):
    scheme = SchemeParams(1, K, P, 1)
    for u in range(min(K, 8) + 1):
        exact = float(rho_u_exact(scheme, u))
        assert rho_u(scheme, u) == pytest.approx(exact, rel=1e-10, abs=1e-300)


def test_rho_u_range():
    with pytest.raises(InvalidParameterError):
        rho_u(SchemeParams(1, 2, 4, 1), 3)


def test_p_q_examples():
    assert p_q_exact(SchemeParams(1, 2, 4, 1)) == pytest.approx(5 / 6, abs=1e-15)
    assert p_q_exact(SchemeParams(1, 2, 4, 2)) == pytest.approx(1 / 6, abs=1e-15)
    assert p_q_exact_rational(SchemeParams(1, 2, 4, 1)) == Fraction(5, 6)


def test_p_q_decreases_with_pool():
    values = [p_q_exact(SchemeParams(1, 20, P, 2)) for P in range(20, 2000, 37)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_p_q_asymptotic_examples():
    assert p_q_asymptotic(SchemeParams(1, 10, 1000, 1)) == pytest.approx(0.1)
    assert p_q_asymptotic(SchemeParams(1, 10, 1000, 2)) == pytest.approx(0.005)
    assert p_q_asymptotic(SchemeParams(1, 10, 20, 1)) == 1.0


@pytest.mark.parametrize('K, P', [(8, 100), (40, 5000), (40, 20000), (5, 5)])
def test_p_q_decreases_with_q(K, P):
    values = [p_q_exact(SchemeParams(1, K, P, q)) for q in range(1, K + 1)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_p_q_asymptotic_error():
    def relative_error(P, q):
        scheme = SchemeParams(1, 40, P, q)
        return abs(p_q_asymptotic(scheme) - p_q_exact(scheme)) / p_q_exact(scheme)

    # K^2/P = 0.08 is still far from the limit at q = 2
    assert relative_error(20000, 1) < 0.05
    assert 0.05 < relative_error(20000, 2) < 0.12
    assert relative_error(200000, 2) < relative_error(20000, 2)


def test_mu_region_examples():
    torus = mu_region(GeoParams(TORUS, 0.1))
    assert torus.value == pytest.approx(0.0314159, abs=1e-7) and torus.exact
    square = mu_region(GeoParams(SQUARE, 0.1))
    assert (square.lower, square.upper) == pytest.approx((0.0201062, 0.0314159), abs=1e-7)
    assert square.value == pytest.approx(math.pi * 0.01) and not square.exact
    with pytest.raises(FormulaDomainError):
        mu_region(GeoParams(TORUS, 0.6))
    with pytest.raises(InvalidParameterError):
        mu_region(GeoParams(RegionKind.FullVisibility))


def test_solve_pool_size():
    assert solve_pool_size(2, 1, 5 / 6) == 4
    P = solve_pool_size(40, 2, 0.1)
    assert p_q_exact(SchemeParams(1, 40, P, 2)) >= 0.1 * (1 - 1e-12)
    assert p_q_exact(SchemeParams(1, 40, P + 1, 2)) < 0.1


def test_solve_pool_size_certain_overlap():
    P = solve_pool_size(40, 1, 1.0)
    assert P >= 79
    assert p_q_exact(SchemeParams(1, 40, P, 1)) >= 1.0 - 1e-12


def test_solve_pool_size_unattainable():
    with pytest.raises(UnattainableTargetError):
        solve_pool_size(10, 2, 0.0)
    with pytest.raises(UnattainableTargetError):
        solve_pool_size(10, 2, 1.5)


def test_rho_brute_force_examples():
    assert rho_brute_force(SchemeParams(1, 2, 4, 1), 1) == Fraction(2, 3)
    assert rho_brute_force(SchemeParams(1, 3, 6, 1), 0) == Fraction(1, 20)
    assert rho_brute_force(SchemeParams(1, 1, 2, 1), 1) == Fraction(1, 2)


def test_rho_brute_force_guard():
    with pytest.raises(EnumerationGuardError):
        rho_brute_force(SchemeParams(1, 10, 40, 1), 2)
