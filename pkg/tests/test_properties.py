import numpy as np
from hypothesis import given, settings, strategies as st

from semiglobal.action import make_context
from semiglobal.cli import RunConfig, format_config, parse_config
from semiglobal.contour import descent_path
from semiglobal.potential import parse_potential, polynomial, turning_points
from semiglobal.reference import compare, pearcey
from semiglobal.wavefunction import evaluate_psi

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(E=finite, hbar=st.floats(1e-3, 2), lo=finite, width=st.floats(0.1, 5), n=st.integers(2, 500),
       pair=st.booleans(), norm=st.sampled_from(["wkb_match", "max_abs_one", "l2_unit", "none"]),
       anchor=st.none() | finite, tol=st.floats(1e-14, 1e-2))
def test_config_text_round_trips(E, hbar, lo, width, n, pair, norm, anchor, tol):
    cfg = RunConfig("harmonic:1", E, hbar, lo, lo + width, n, anchor=anchor, pair=pair,
                    normalization=norm, tol_quad=tol)
    assert parse_config(format_config(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(coeffs=st.lists(st.floats(-3, 3), min_size=2, max_size=5).filter(lambda c: abs(c[-1]) > 0.1),
       E=st.floats(-2, 2))
def test_turning_points_are_roots(coeffs, E):
    spec = polynomial(coeffs)
    tps = turning_points(spec, E)
    assert sum(t.multiplicity for t in tps) == len(coeffs) - 1
    scale = max(1.0, max(abs(c) for c in coeffs))
    for t in tps:
        z = t.location
        assert abs(spec.value(z) - E) <= 1e-7 * scale * max(1.0, abs(z)) ** (len(coeffs) - 1)


@settings(max_examples=30, deadline=None)
@given(a=st.complex_numbers(min_magnitude=0.1, max_magnitude=10),
       b=st.complex_numbers(max_magnitude=10), scale=st.complex_numbers(min_magnitude=0.01, max_magnitude=100))
def test_compare_error_is_scale_invariant(a, b, scale):
    q = np.linspace(0, 3, 30)
    u, v = np.exp(1j * q), np.exp(-1j * q)
    noise = 0.05 * np.cos(7.3 * q)
    psi = a * u + b * v + noise
    r1 = compare(psi, (u, v)).rel_l2_error
    r2 = compare(scale * psi, (u, v)).rel_l2_error
    assert abs(r1 - r2) <= 1e-9 * max(r1, 1e-12) + 1e-14


@settings(max_examples=15, deadline=None)
@given(x=st.floats(-6, 6), y=st.floats(0, 6))
def test_pearcey_is_even_in_y(x, y):
    assert abs(pearcey(x, y) - pearcey(x, -y)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(E=st.floats(0.1, 3), q=st.floats(-4, 4), sheet=st.sampled_from([1, -1]))
def test_free_motion_gives_plane_waves(E, q, sheet):
    ctx = make_context(parse_potential("free:"), E, 1.0)
    k = np.sqrt(2 * E)
    psi = evaluate_psi(ctx, q, descent_path(ctx, q, sheet)).psi
    expect = np.sqrt(np.pi / 2) * np.exp(-1j * sheet * np.pi / 4) / np.sqrt(k) * np.exp(1j * sheet * k * q)
    assert abs(psi - expect) < 1e-8 * abs(expect)
