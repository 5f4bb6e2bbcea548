import numpy as np
import pytest

from semiglobal.action import (action_along_path, action_real, default_anchor, make_context, momentum,
                               real_axis_path)
from semiglobal.potential import parse_potential, turning_points

from conftest import context


def _outer(x, a):
    """int_a^x sqrt(r**2 - a**2) dr for x >= a."""
    return 0.5 * (x * np.sqrt(x * x - a * a) - a * a * np.log((x + np.sqrt(x * x - a * a)) / a))


@pytest.fixture(scope="module")
def osc():
    return context("harmonic:1", 2.0, 1.0)


def test_default_anchor_is_left_turning_point(osc):
    assert osc.anchor == -2.0
    assert osc.anchor_is_turning_point


def test_default_anchor_rules():
    tps = turning_points(parse_potential("linear:1"), 0.0)
    assert default_anchor(tps, domain_center=1.0) == 0.0
    assert default_anchor(tps, domain_center=-1.0) == 0.0
    assert default_anchor([], 0.0) == 0.0


@pytest.mark.parametrize("q, expected", [
    # [DERIVED] closed form 0.5 (x sqrt(a^2 - x^2) + a^2 asin(x/a)) from -a, a = 2, via mpmath
    (0.5, 4.1310760821498776561),
    (-1.0, 1.2283696986087568455),
    (1.5, 5.829873553201976726),
])
def test_allowed_region_action_matches_closed_form(osc, q, expected):
    av = action_real(osc, q)
    assert abs(av.S - expected) < 1e-12
    assert av.branch_parity == 0
    assert av.g.real > 0


def test_forbidden_sides_follow_upper_half_plane_detours(osc):
    right = action_real(osc, 2.5)
    left = action_real(osc, -2.5)
    j = _outer(2.5, 2.0)
    assert abs(right.S - (2 * np.pi - 1j * j)) < 1e-11
    assert abs(left.S - (-1j * j)) < 1e-11
    assert abs(right.g - (-1.5j)) < 1e-12
    assert abs(left.g - 1.5j) < 1e-12


def test_action_is_path_independent_away_from_turning_points(osc):
    straight = action_along_path(osc, real_axis_path(osc, 1.0))
    bent = action_along_path(osc, list(real_axis_path(osc, 0.0)) + [0.5 + 0.3j, 1.0])
    assert abs(straight.S - bent.S) < 1e-11


def test_path_must_start_at_anchor(osc):
    with pytest.raises(ValueError):
        action_along_path(osc, [0.0, 1.0])


def test_momentum_branch_hint():
    ctx = context("harmonic:1", 2.0, 1.0)
    g = momentum(ctx, 0.0)
    assert g == 2.0
    assert momentum(ctx, 0.0, branch_hint=-1.0) == -2.0


def test_free_action_is_linear(free_ctx):
    for q in (-3.0, 0.7, 4.0):
        av = action_real(free_ctx, q)
        assert abs(av.S - q) < 1e-13


def test_linear_action_closed_form(linear_ctx):
    # V = -q, E = 0: S = (2 sqrt 2 / 3) q^(3/2) on the allowed side
    for q in (0.3, 1.2):
        assert abs(action_real(linear_ctx, q).S - 2 * np.sqrt(2) / 3 * q**1.5) < 1e-12
    # forbidden side, reached through the upper half plane: g = +i|g|
    av = action_real(linear_ctx, -0.8)
    assert abs(av.S - (-1j) * 2 * np.sqrt(2) / 3 * 0.8**1.5) < 1e-12


def test_hbar_must_be_positive():
    with pytest.raises(ValueError):
        make_context(parse_potential("free:"), 1.0, 0.0)
