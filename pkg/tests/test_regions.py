import math

import pytest

from keymesh.errors import InvalidParameterError
from keymesh.regions import Region, get_region, parse_region, region_label


def test_parse_region():
    assert parse_region(' Torus ') == Region.Kind.UnitTorus
    assert parse_region('square') == Region.Kind.UnitSquare
    assert parse_region('FULL') == Region.Kind.FullVisibility
    with pytest.raises(InvalidParameterError):
        parse_region('sphere')


def test_region_label_round_trip():
    for kind in Region.Kind:
        assert parse_region(region_label(kind)) == kind


def test_region_objects():
    torus = get_region(Region.Kind.UnitTorus)
    assert torus.wraps and torus.has_positions
    assert torus.get_kind() == Region.Kind.UnitTorus
    assert not get_region(Region.Kind.UnitSquare).wraps
    assert not get_region(Region.Kind.FullVisibility).has_positions
    with pytest.raises(InvalidParameterError):
        get_region('torus')


def test_torus_edge_probability_is_exact():
    probability = get_region(Region.Kind.UnitTorus).edge_probability(0.1)
    assert probability.exact
    assert probability.value == pytest.approx(0.0314159, abs=1e-7)
    assert probability.lower == probability.upper == probability.value


def test_square_edge_probability_bounds():
    probability = get_region(Region.Kind.UnitSquare).edge_probability(0.1)
    assert not probability.exact
    assert probability.lower == pytest.approx(0.0201062, abs=1e-7)
    assert probability.upper == pytest.approx(0.0314159, abs=1e-7)
    # exact square value pi r^2 - 8 r^3 / 3 + r^4 / 2 sits inside the bounds
    exact = math.pi * 0.01 - 8 * 0.001 / 3 + 0.0001 / 2
    assert probability.lower <= exact <= probability.upper


def test_full_visibility_has_no_geometry():
    region = get_region(Region.Kind.FullVisibility)
    with pytest.raises(InvalidParameterError):
        region.edge_probability(0.1)
    with pytest.raises(InvalidParameterError):
        region.distance((0, 0), (0.1, 0.1))
