import math

import numpy as np
import pytest
from numpy.polynomial import hermite

from semiglobal.errors import (AtTurningPoint, BadBoundary, GridTooCoarse, IllConditionedFit,
                               OutOfWindow)
from semiglobal.reference import (_airy_asymptotic, _airy_series, airy, compare, linear_airy_reference, local_residual, numerov_solve,
                                  pearcey, schrodinger_residual, wkb)
from semiglobal.wavefunction import WaveSample

from conftest import context

# [DERIVED] scipy.special.airy
AIRY_TABLE = [
    (-10.0, 0.040241238486441955, 0.9962650441327905),
    (-5.0, 0.3507610090241142, 0.3271928185544436),
    (-1.0, 0.5355608832923522, -0.010160567116645175),
    (1.0, 0.13529241631288147, -0.15914744129679328),
    (3.0, 0.006591139357460717, -0.011912976705951313),
    (6.0, 9.947694360252897e-06, -2.4765200397034972e-05),
    (10.0, 1.1047532552898654e-10, -3.520633676738912e-10),
]

# [DERIVED] mpmath.quad of exp(i(t^4 + x t^2 + y t)) on rotated rays
PEARCEY_TABLE = [
    (1.0, 0.5, 1.2095957689202441 + 0.73389593624605832j),
    (-3.0, 2.0, 1.032691525486228 + 0.62351867695214574j),
    (2.0, -1.0, 0.9544094376131261 + 0.6217592048508423j),
    (-6.0, 0.0, 0.15928057165274659 - 1.4834206582283263j),
    (4.0, 4.0, 0.76659803985988904 - 0.13265760920238268j),
    (-8.0, 8.0, 1.0692955335396667 + 0.22585230580171766j),
]

# [DERIVED] Gamma(1/4)/2 via mpmath
PEARCEY_ORIGIN_ABS = 1.81280495411095415597


@pytest.mark.parametrize("x, ai, aip", AIRY_TABLE)
def test_airy_matches_table(x, ai, aip):
    a, ap = airy(x)
    assert abs(a - ai) <= 1e-11 * max(1.0, abs(ai))
    assert abs(ap - aip) <= 1e-11 * max(1.0, abs(aip))


def test_airy_is_continuous_across_method_splits():
    for x in (-7.0, 5.5):
        series, asym = _airy_series(x), _airy_asymptotic(x)
        assert abs(series[0] - asym[0]) < 1e-11 and abs(series[1] - asym[1]) < 1e-11


def test_airy_solves_its_equation():
    h = 1e-3
    for x in (-8.0, -2.3, 0.7, 4.0, 9.0):
        d2 = (airy(x + h)[0] - 2 * airy(x)[0] + airy(x - h)[0]) / h ** 2
        assert abs(d2 - x * airy(x)[0]) < 1e-5


def test_airy_window():
    with pytest.raises(OutOfWindow):
        airy(12.5)


@pytest.mark.parametrize("x, y, val", PEARCEY_TABLE)
def test_pearcey_matches_table(x, y, val):
    assert abs(pearcey(x, y) - val) < 1e-9


def test_pearcey_origin_modulus_and_symmetry():
    assert abs(abs(pearcey(0.0, 0.0)) - PEARCEY_ORIGIN_ABS) < 1e-11
    for x, y in ((1.3, 2.2), (-4.0, 5.0)):
        assert abs(pearcey(x, y) - pearcey(x, -y)) < 1e-11


def test_pearcey_window():
    with pytest.raises(OutOfWindow):
        pearcey(0.0, 8.5)


def test_numerov_reproduces_sine(free_ctx):
    q = np.linspace(-3, 3, 601)
    out = numerov_solve(free_ctx, q, ("node_at", 0.0))
    assert np.max(np.abs(out[:, 1] - np.sin(q) / np.abs(np.sin(q)).max())) < 1e-8


def test_numerov_converges_at_fourth_order(free_ctx):
    errs = []
    for n in (61, 121):
        q = np.linspace(-3, 3, n)
        y = numerov_solve(free_ctx, q, ("node_at", 0.0))[:, 1] * np.abs(np.sin(q)).max()
        errs.append(np.max(np.abs(y - np.sin(q))))
    assert 12 < errs[0] / errs[1] < 20


def test_numerov_decay_left_follows_airy(linear_ctx):
    q = np.linspace(-2.0, 1.5, 3501)
    y = numerov_solve(linear_ctx, q, "decay_left")[:, 1]
    ref = linear_airy_reference(linear_ctx, q)
    ref = ref / np.abs(ref).max()
    assert np.max(np.abs(y - ref)) < 1e-3


def test_matched_numerov_is_the_hermite_function(harmonic_ctx):
    # exact 21st oscillator level: H_20(q/sqrt(hbar)) exp(-q^2 / 2 hbar)
    q = np.linspace(-2.2, 2.2, 4401)
    x = q / math.sqrt(harmonic_ctx.hbar)
    exact = hermite.hermval(x, [0] * 20 + [1]) * np.exp(-x * x / 2)
    exact /= np.abs(exact).max()
    y = numerov_solve(harmonic_ctx, q, "matched")[:, 1]
    assert min(np.max(np.abs(y - exact)), np.max(np.abs(y + exact))) < 1e-4


def test_numerov_boundary_errors(harmonic_ctx, free_ctx):
    with pytest.raises(BadBoundary):
        numerov_solve(harmonic_ctx, np.linspace(-1, 1, 101), "decay_left")
    with pytest.raises(BadBoundary):
        numerov_solve(free_ctx, np.linspace(-1, 1, 101), ("node_at", 0.005))
    with pytest.raises(ValueError):
        numerov_solve(free_ctx, np.linspace(-1, 1, 101), "periodic")
    with pytest.raises(ValueError):
        numerov_solve(free_ctx, [0.0, 0.1, 0.3], ("node_at", 0.1))


def test_wkb_for_free_motion_is_a_plane_wave(free_ctx):
    for q in (-1.0, 0.0, 2.5):
        assert abs(wkb(free_ctx, q, 1) - np.exp(1j * q)) < 1e-13
        assert abs(wkb(free_ctx, q, -1) - np.exp(-1j * q)) < 1e-13


def test_wkb_diverges_at_turning_point(linear_ctx):
    with pytest.raises(AtTurningPoint):
        wkb(linear_ctx, 0.0)


def _samples(q, psi):
    return [WaveSample(float(a), complex(b), 0j, 0j, 0, 0.0, 0.0) for a, b in zip(q, psi)]


def test_residual_of_exact_plane_wave_is_grid_limited(free_ctx):
    q = np.linspace(0, 2, 81)
    prof = schrodinger_residual(free_ctx, _samples(q, np.exp(1j * q)), check=False)
    assert prof.median < 1e-6
    assert np.allclose(prof.r, prof.grid_bound, rtol=0.3)
    assert np.all(prof.grid_bound < 1e-6)


def test_residual_needs_seven_points_and_a_resolving_grid(free_ctx):
    q = np.linspace(0, 1, 6)
    with pytest.raises(GridTooCoarse):
        schrodinger_residual(free_ctx, _samples(q, np.exp(1j * q)))
    # an exact solution leaves only truncation error, which the check flags
    q = np.linspace(0, 2, 81)
    with pytest.raises(GridTooCoarse):
        schrodinger_residual(free_ctx, _samples(q, np.exp(1j * q)))


def test_local_residual_is_small_and_resolved(harmonic_ctx):
    r, bound = local_residual(harmonic_ctx, 0.4)
    assert r < 1e-3 and bound < 0.1 * r


def test_compare_recovers_coefficients():
    q = np.linspace(0, 3, 50)
    u, v = np.exp(1j * q), np.exp(-1j * q)
    rep = compare(_samples(q, (2 - 1j) * u + 0.5 * v), (u, v), region=(1, 2))
    assert np.allclose(rep.fit_coefficients, (2 - 1j, 0.5))
    assert rep.rel_l2_error < 1e-14 and rep.max_rel_error_region < 1e-14


def test_compare_is_invariant_under_rescaling():
    rng = np.random.default_rng(3)
    q = np.linspace(0, 3, 40)
    u, v = np.exp(1j * q), np.exp(-1j * q)
    psi = u + 0.3 * v + 0.01 * rng.normal(size=q.size)
    a = compare(_samples(q, psi), (u, v))
    b = compare(_samples(q, (3 - 4j) * psi), (u, v))
    assert b.rel_l2_error == pytest.approx(a.rel_l2_error, rel=1e-10)


def test_compare_rejects_dependent_references():
    q = np.linspace(0, 1, 10)
    u = np.exp(1j * q)
    with pytest.raises(IllConditionedFit):
        compare(u, (u, 2 * u))
    with pytest.raises(IllConditionedFit):
        compare(u, (np.zeros(10), None))


def test_numerov_decay_right_gives_the_ground_state():
    ctx = context("harmonic:1", 0.5, 1.0)
    q = np.linspace(-2.0, 6.0, 8001)
    y = numerov_solve(ctx, q, "decay_right")[:, 1]
    i0, i1 = np.searchsorted(q, [0.0, 1.0])
    assert abs(y[i1] / y[i0] - math.exp(-0.5)) < 1e-6


def test_numerov_linear_ramp_matches_airy_on_wide_window():
    ctx = context("linear:1", 0.0, 1.0)
    q = np.linspace(-4.0, 2.0, 6001)
    y = numerov_solve(ctx, q, "decay_left")[:, 1]
    rep = compare(y, (linear_airy_reference(ctx, q), None))
    assert rep.rel_l2_error < 1e-6
