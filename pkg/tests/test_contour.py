import numpy as np
import pytest

from semiglobal.contour import (ContourPath, build_path, default_avoid_radius, default_scan_radius,
                                descent_path, independent_pair, path_clearance, quartic_decay_rays,
                                scan_sectors, seed, singularities, truncation_radius)
from semiglobal.errors import PathBlocked
from semiglobal.potential import polynomial
from semiglobal.action import make_context
from semiglobal.wavefunction import evaluate_phi

from conftest import context

FRESNEL = np.sqrt(np.pi / 2) * np.exp(-1j * np.pi / 4)


def test_singularities_are_square_roots_of_q_minus_turning_points():
    ctx = context("harmonic:1", 2.0, 1.0)
    sing = singularities(ctx, 0.0)
    pts = sorted(sing.points, key=lambda z: (round(z.real, 9), z.imag))
    assert np.allclose(pts, [-np.sqrt(2), -1j * np.sqrt(2), 1j * np.sqrt(2), np.sqrt(2)])
    for it in sing:
        assert abs(it.s**2 - (0.0 - it.source.location)) < 1e-9
        assert it.exponent == 1.5


def test_turning_point_at_q_gives_one_singularity_at_origin(linear_ctx):
    sing = singularities(linear_ctx, 0.0)
    assert len(sing) == 1 and sing.points[0] == 0


def test_seed_at_turning_point(linear_ctx):
    sd = seed(linear_ctx, 0.0, 1)
    assert sd.at_turning_point and sd.g0 == 0
    assert seed(linear_ctx, 0.5, -1).g0 == -seed(linear_ctx, 0.5, 1).g0


def test_free_particle_sectors_are_the_fresnel_quadrants(free_ctx):
    sm = scan_sectors(free_ctx, 0.0, 4.0, continuation="circle")
    deg = [(round(np.degrees(lo), 6), round(np.degrees(hi), 6)) for lo, hi in sm.sectors]
    assert deg == [(90.0, 180.0), (270.0, 360.0)]
    assert sm.index_of(np.radians(135)) == 0 and sm.index_of(np.radians(10)) is None


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_power_potentials_have_n_plus_two_sectors(n):
    ctx = make_context(polynomial([0.0] * n + [1.0]), 0.5, 1.0)
    for q in (0.0, 0.4):
        sm = scan_sectors(ctx, q, default_scan_radius(ctx, q), continuation="circle")
        assert len(sm) == n + 2


def test_scan_needs_enough_angles(free_ctx):
    with pytest.raises(ValueError):
        scan_sectors(free_ctx, 0.0, 4.0, n_angles=32)


@pytest.fixture(scope="module")
def fresnel_path(free_ctx):
    sm = scan_sectors(free_ctx, 0.0, 4.0, continuation="circle")
    return build_path(sm, singularities(free_ctx, 0.0), 0, 1, truncation_radius(free_ctx, 0.0, sm))


def test_fresnel_integral_on_sector_path(free_ctx, fresnel_path):
    phi, diag = evaluate_phi(free_ctx, 0.0, fresnel_path)
    assert abs(phi - FRESNEL) < 1e-9
    assert diag.est_error < 1e-8


def test_reversed_path_negates_the_integral(free_ctx, fresnel_path):
    phi, _ = evaluate_phi(free_ctx, 0.0, fresnel_path.reversed())
    assert abs(phi + FRESNEL) < 1e-9
    assert fresnel_path.reversed().sector_in == fresnel_path.sector_out


def test_build_path_validates_indices(free_ctx):
    sm = scan_sectors(free_ctx, 0.0, 4.0, continuation="circle")
    sing = singularities(free_ctx, 0.0)
    with pytest.raises(IndexError):
        build_path(sm, sing, 0, 5, 10.0)
    with pytest.raises(ValueError):
        build_path(sm, sing, 1, 1, 10.0)
    with pytest.raises(ValueError):
        build_path(sm, sing, 0, 1, 1.0)


def test_overlapping_disks_block_the_path():
    ctx = context("harmonic:1", 2.0, 1.0)
    sm = scan_sectors(ctx, 0.0, 6.0, continuation="circle")
    with pytest.raises(PathBlocked):
        build_path(sm, singularities(ctx, 0.0), 0, 2, 12.0, delta_avoid=1.5)


def test_sector_path_detours_keep_clearance():
    ctx = context("linear:1", 0.0, 0.1)
    q = 0.5
    sm = scan_sectors(ctx, q, default_scan_radius(ctx, q), continuation="ray")
    sing = singularities(ctx, q)
    p = build_path(sm, sing, 0, 1, truncation_radius(ctx, q, sm))
    assert p.clearance >= default_avoid_radius(sing) * (1 - 1e-12)
    assert p.clearance == pytest.approx(path_clearance(p.waypoints, sing.points))


def test_descent_paths_are_symmetric_rays(harmonic_ctx):
    for q in (0.0, 1.0, 1.8):
        for sheet in (1, -1):
            p = descent_path(harmonic_ctx, q, sheet)
            assert p.is_symmetric
            assert p.path_id.startswith("sd+" if sheet > 0 else "sd-")


def test_allowed_region_descent_ray_is_at_minus_45_degrees(harmonic_ctx):
    p = descent_path(harmonic_ctx, 0.0, 1)
    assert np.isclose(np.angle(p.waypoints[-1]), -np.pi / 4)
    p = descent_path(harmonic_ctx, 0.0, -1)
    assert np.isclose(np.angle(p.waypoints[-1]), np.pi / 4)


def test_independent_pair_uses_both_sheets(harmonic_ctx):
    a, b = independent_pair(harmonic_ctx, 0.3)
    assert (a.sheet, b.sheet) == (1, -1)


def test_quartic_rays_come_from_the_sector_scanner():
    th_in, th_out = quartic_decay_rays()
    assert np.isclose(np.degrees(th_in), 202.5)
    assert np.isclose(np.degrees(th_out), 22.5)


def test_phi_is_stable_under_homotopy_jitter(harmonic_ctx):
    rng = np.random.default_rng(7)
    tol_quad = 1e-8
    for q in (0.3, 1.43, 1.8):
        p = descent_path(harmonic_ctx, q)
        _, d0 = evaluate_phi(harmonic_ctx, q, p, tol_quad)
        a, _, b = p.waypoints
        for _ in range(3):
            rot = np.exp(1j * np.radians(rng.uniform(-3, 3)))
            kick = lambda: 0.05 * p.clearance * complex(*rng.normal(size=2))
            pts = ([a * rot] + [a * t + kick() for t in (0.75, 0.5, 0.25)] + [0j]
                   + [b * t + kick() for t in (0.25, 0.5, 0.75)] + [b * np.conj(rot)])
            jp = ContourPath(tuple(pts), None, None, p.clearance, p.sheet, q, "jitter")
            _, d = evaluate_phi(harmonic_ctx, q, jp, tol_quad)
            assert abs(d.integral - d0.integral) <= 10 * tol_quad * abs(d0.integral)
