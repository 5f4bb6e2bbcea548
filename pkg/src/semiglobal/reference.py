"""Independent comparators: WKB branches, Airy and Pearcey integrals, a
Numerov solver, the Schrödinger residual and least-squares comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._panels import integrate_line
from .action import ProblemContext, action_real
from .contour import ACTION_TOL, descent_path, quartic_decay_rays
from .errors import (AtTurningPoint, BadBoundary, GridTooCoarse, IllConditionedFit, OutOfWindow,
                     QuadratureNoConvergence)
from .wavefunction import TOL_QUAD, evaluate_psi

G_FLOOR = 1e-8

AIRY_WINDOW = 12.0
# Maclaurin series inside [SERIES_LEFT, SERIES_RIGHT], asymptotics outside;
# at these splits both stay below 1e-11 absolute error.
SERIES_LEFT, SERIES_RIGHT = -7.0, 5.5
AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))


def wkb(ctx: ProblemContext, q: float, branch: int = 1) -> complex:
    """``g**-0.5 * exp(i branch S/hbar)`` with the action and the argument of
    g continued from the anchor along the real axis.

    Raises
    ------
    AtTurningPoint
        If ``|g(q)|`` is below the floor, where the WKB form diverges.
    """
    av = action_real(ctx, q, tol=ACTION_TOL)
    scale = max(1.0, math.sqrt(abs(2.0 * ctx.E)))
    if abs(av.g) < G_FLOOR * scale:
        raise AtTurningPoint(f"WKB amplitude diverges at the turning point q={q}")
    amp = np.exp(-0.5j * av.arg_g) / math.sqrt(abs(av.g))
    return complex(amp * np.exp(1j * branch * av.S / ctx.hbar))


# ---------------------------------------------------------------- Airy


def _airy_series(x: float):
    if x == 0.0:
        return AI0, AIP0
    f = g = fp = gp = 0.0
    a = b = 1.0  # coefficients of x**(3k) in f and x**(3k+1) in g
    x3 = x ** 3
    p = 1.0      # x**(3k)
    for k in range(200):
        f += a * p
        g += b * p * x
        if k:
            fp += a * 3 * k * p / x
        gp += b * (3 * k + 1) * p
        a /= (3 * k + 2) * (3 * k + 3)
        b /= (3 * k + 3) * (3 * k + 4)
        p *= x3
        if abs(a * p) < 1e-18 * max(1.0, abs(f)) and abs(b * p) * max(1.0, abs(x)) < 1e-18 * max(1.0, abs(g)):
            break
    return AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp


def _asymptotic_coefficients(n: int = 60):
    u = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n)]
    return np.array(u), np.array(v)


_U, _V = _asymptotic_coefficients()


def _truncated(terms):
    """Sum of an asymptotic series stopped before its terms start growing."""
    total, prev = 0.0, np.inf
    for t in terms:
        if abs(t) > prev:
            break
        total += t
        prev = abs(t)
    return total


def _airy_asymptotic(x: float):
    z = abs(x)
    zeta = 2.0 / 3.0 * z ** 1.5
    k = np.arange(len(_U))
    if x > 0:
        pre = math.exp(-zeta) / (2.0 * math.sqrt(math.pi))
        su = _truncated((-1.0) ** k * _U / zeta ** k)
        sv = _truncated((-1.0) ** k * _V / zeta ** k)
        return pre * su / z ** 0.25, -pre * z ** 0.25 * sv
    m = np.arange(len(_U) // 2)
    sgn = (-1.0) ** m
    ue = _truncated(sgn * _U[0::2] / zeta ** (2 * m))
    uo = _truncated(sgn * _U[1::2] / zeta ** (2 * m + 1))
    ve = _truncated(sgn * _V[0::2] / zeta ** (2 * m))
    vo = _truncated(sgn * _V[1::2] / zeta ** (2 * m + 1))
    c, s = math.cos(zeta - math.pi / 4), math.sin(zeta - math.pi / 4)
    ai = (c * ue + s * uo) / (math.sqrt(math.pi) * z ** 0.25)
    aip = z ** 0.25 / math.sqrt(math.pi) * (s * ve - c * vo)
    return ai, aip


def airy(x: float) -> tuple[float, float]:
    """``(Ai(x), Ai'(x))`` for ``|x| <= 12``.

    Raises
    ------
    OutOfWindow
        Outside the supported window.
    """
    x = float(x)
    if not abs(x) <= AIRY_WINDOW:
        raise OutOfWindow(f"airy supports |x| <= {AIRY_WINDOW}, got {x}")
    if SERIES_LEFT <= x <= SERIES_RIGHT:
        return _airy_series(x)
    return _airy_asymptotic(x)


def linear_airy_reference(ctx: ProblemContext, grid) -> np.ndarray:
    """Exact solution ``Ai((2 V1/hbar**2)**(1/3) (q - q_t))`` of a linear
    potential ``V = V0 + V1 q``, decaying on its forbidden side."""
    c = ctx.spec.coefficients
    if ctx.spec.kind != "polynomial" or len(c) != 2:
        raise ValueError("the Airy reference needs a linear potential")
    v0, v1 = c
    qt = (ctx.E - v0) / v1
    k = np.cbrt(2.0 * v1 / ctx.hbar ** 2)
    return np.array([airy(k * (q - qt))[0] for q in grid])


# ---------------------------------------------------------------- Pearcey


PEARCEY_WINDOW = 8.0


def pearcey(x: float, y: float, tol: float = 1e-13) -> complex:
    """``int exp(i (t**4 + x t**2 + y t)) dt`` over the real line.

    The line is rotated onto the two rays that the sector scanner finds for
    the quartic exponent, and each ray is integrated adaptively out to where
    the integrand is below ``e**-45``.

    Raises
    ------
    OutOfWindow
        For ``|x|`` or ``|y|`` above 8.
    QuadratureNoConvergence
        If the adaptive quadrature misses its tolerance.
    """
    if abs(x) > PEARCEY_WINDOW or abs(y) > PEARCEY_WINDOW:
        raise OutOfWindow(f"pearcey supports |x|, |y| <= {PEARCEY_WINDOW}")
    th_in, th_out = quartic_decay_rays()

    def f(t):
        return np.exp(1j * (t ** 4 + x * t * t + y * t))

    total, err = 0j, 0.0
    for th, sign in ((th_out, 1.0), (th_in, -1.0)):
        u = np.exp(1j * th)
        R = 1.0 + math.sqrt(abs(x)) + abs(y) ** (1.0 / 3.0)
        while (1j * ((R * u) ** 4 + x * (R * u) ** 2 + y * R * u)).real > -45.0:
            R *= 1.25
        val, e, _ = integrate_line(f, 0j, R * u, tol)
        total += sign * val
        err += e
    if err > max(100 * tol, 1e-8) * max(1.0, abs(total)):
        raise QuadratureNoConvergence(f"pearcey quadrature error {err:.3g}")
    return complex(total)


# ---------------------------------------------------------------- Numerov


def _uniform(grid):
    q = np.asarray(grid, dtype=float)
    if q.size < 3:
        raise GridTooCoarse("Numerov needs at least 3 grid points")
    h = np.diff(q)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0) or h[0] <= 0:
        raise ValueError("grid must be uniform and increasing")
    return q, float(h[0])


def _numerov_sweep(f, y, h, start, stop, step):
    """Fill ``y`` from indices ``start - step`` and ``start`` in direction ``step``."""
    w = 1.0 - h * h * f / 12.0
    for i in range(start, stop, step):
        y[i + step] = ((12.0 - 10.0 * w[i]) * y[i] - w[i - step] * y[i - step]) / w[i + step]


def numerov_solve(ctx: ProblemContext, grid, bc: str | tuple = "decay_left") -> np.ndarray:
    """Real solution of ``-(hbar**2/2) psi'' + V psi = E psi`` on a uniform grid.

    Parameters
    ----------
    bc : {"decay_left", "decay_right", "matched"} or ("node_at", q0)
        ``decay_*`` seeds the solution decaying into the forbidden region at
        that end with WKB asymptotics and integrates inward. ``matched``
        integrates inward from both ends and joins the two sweeps, scaled
        to agree, at the point where their product is largest; a single
        sweep carries an exponentially growing error into the far forbidden
        region, so this is the reference for states decaying at both ends.
        ``("node_at", q0)`` sets ``psi(q0) = 0``, ``psi'(q0) = 1`` at a grid
        point and integrates outward in both directions.

    Returns
    -------
    ndarray of shape (n, 2)
        Columns ``q`` and ``psi`` (unnormalized).

    Raises
    ------
    BadBoundary
        If a decay end is not classically forbidden, or ``q0`` is off-grid.
    """
    if bc == "matched":
        q = _uniform(grid)[0]
        left = numerov_solve(ctx, q, "decay_left")[:, 1]
        right = numerov_solve(ctx, q, "decay_right")[:, 1]
        m = int(np.argmax(np.abs(left * right)))
        if left[m] == 0 or right[m] == 0:
            raise BadBoundary("the two sweeps vanish together; nothing to match")
        y = np.where(np.arange(q.size) <= m, left / left[m], right / right[m])
        return np.column_stack([q, y / np.abs(y).max()])
    q, h = _uniform(grid)
    V = np.real(ctx.spec.value(q))
    f = 2.0 * (V - ctx.E) / ctx.hbar ** 2
    y = np.zeros_like(q)
    if bc in ("decay_left", "decay_right"):
        left = bc == "decay_left"
        i0, i1 = (0, 1) if left else (len(q) - 1, len(q) - 2)
        if not (f[i0] > 0 and f[i1] > 0):
            raise BadBoundary(f"{bc} needs a classically forbidden end, V - E = {V[i0] - ctx.E:.3g}")
        k0, k1 = math.sqrt(f[i0]), math.sqrt(f[i1])
        y[i0] = 1e-30
        y[i1] = y[i0] * math.sqrt(k0 / k1) * math.exp(0.5 * h * (k0 + k1))
        if left:
            _numerov_sweep(f, y, h, 1, len(q) - 1, 1)
        else:
            _numerov_sweep(f, y, h, len(q) - 2, 0, -1)
    elif isinstance(bc, tuple) and len(bc) == 2 and bc[0] == "node_at":
        q0 = float(bc[1])
        m = int(round((q0 - q[0]) / h))
        if not (0 < m < len(q) - 1) or abs(q[m] - q0) > 1e-9 * max(1.0, h):
            raise BadBoundary(f"node_at needs an interior grid point, got {q0}")
        d1 = 2.0 * float(np.real(ctx.spec.derivative(q0))) / ctx.hbar ** 2
        d2 = 2.0 * float(np.real(ctx.spec.second_derivative(q0))) / ctx.hbar ** 2
        f0 = f[m]
        for sgn in (1.0, -1.0):
            t = sgn * h
            # Taylor start for y(0) = 0, y'(0) = 1, y'' = f y
            y[m + int(sgn)] = t + f0 * t ** 3 / 6 + d1 * t ** 4 / 12 + (3 * d2 + f0 * f0) * t ** 5 / 120
        _numerov_sweep(f, y, h, m + 1, len(q) - 1, 1)
        _numerov_sweep(f, y, h, m - 1, 0, -1)
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    scale = np.abs(y).max()
    return np.column_stack([q, y / scale if scale > 0 else y])


# ---------------------------------------------------------------- residual


@dataclass(frozen=True)
class ResidualProfile:
    """Normalized Schrödinger residual ``r(q)`` with the finite-difference
    error estimate ``grid_bound(q)`` at the same interior points."""

    q: np.ndarray
    r: np.ndarray
    grid_bound: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.q, self.r)]

    @property
    def median(self) -> float:
        return float(np.median(self.r))

    @property
    def median_bound(self) -> float:
        return float(np.median(self.grid_bound))


def _second4(psi, h):
    return (-psi[1:-5] + 16 * psi[2:-4] - 30 * psi[3:-3] + 16 * psi[4:-2] - psi[5:-1]) / (12 * h * h)


def _second6(psi, h):
    return (2 * psi[:-6] - 27 * psi[1:-5] + 270 * psi[2:-4] - 490 * psi[3:-3]
            + 270 * psi[4:-2] - 27 * psi[5:-1] + 2 * psi[6:]) / (180 * h * h)


def schrodinger_residual(ctx: ProblemContext, samples, check: bool = True) -> ResidualProfile:
    """``|-(hbar**2/2) psi'' + (V - E) psi| / (max|psi| max(|E|, 1))``.

    ``psi''`` uses fourth-order central differences; the difference to the
    sixth-order stencil estimates the grid error. Only points with three
    neighbours on each side are reported.

    Raises
    ------
    GridTooCoarse
        With fewer than 7 points, or (when ``check``) if the median grid
        error estimate exceeds half the median residual.
    """
    if len(samples) < 7:
        raise GridTooCoarse("the residual needs at least 7 grid points")
    q, h = _uniform([s.q for s in samples])
    psi = np.array([s.psi for s in samples], dtype=complex)
    d4, d6 = _second4(psi, h), _second6(psi, h)
    qi = q[3:-3]
    V = np.real(ctx.spec.value(qi))
    norm = np.abs(psi).max() * max(abs(ctx.E), 1.0)
    if norm == 0:
        raise GridTooCoarse("samples vanish identically")
    r = np.abs(-0.5 * ctx.hbar ** 2 * d4 + (V - ctx.E) * psi[3:-3]) / norm
    bound = 0.5 * ctx.hbar ** 2 * np.abs(d4 - d6) / norm
    prof = ResidualProfile(qi, r, bound)
    if check and prof.median_bound > 0.5 * prof.median:
        raise GridTooCoarse(f"grid error {prof.median_bound:.3g} exceeds half the residual {prof.median:.3g}")
    return prof


def local_residual(ctx: ProblemContext, q: float, sheet: int = 1, h: float | None = None,
                   tol_quad: float = 1e-12) -> tuple[float, float]:
    """Residual of the sheet solution at ``q`` from a 7-point stencil on one
    frozen descent path.

    ``h`` defaults to ``0.05 hbar/|g(q)|``, a twentieth of the local reduced
    wavelength. Returns ``(r, grid_bound)``.
    """
    av = action_real(ctx, q, tol=ACTION_TOL)
    if h is None:
        h = 0.05 * ctx.hbar / max(abs(av.g), 1e-3)
    path = descent_path(ctx, q, sheet)
    pts = [evaluate_psi(ctx, q + k * h, path, tol_quad) for k in range(-3, 4)]
    prof = schrodinger_residual(ctx, pts, check=False)
    return float(prof.r[0]), float(prof.grid_bound[0])


# ---------------------------------------------------------------- comparison


@dataclass(frozen=True)
class ComparisonReport:
    grid: np.ndarray
    fit_coefficients: tuple
    rel_l2_error: float
    max_rel_error_region: float
    residual_profile: list
    metadata: dict = field(default_factory=dict)


def compare(samples, ref_pair, region=None, metadata=None, cond_limit: float = 1e10) -> ComparisonReport:
    """Least-squares fit ``samples ~ a ref1 + b ref2`` on the common grid.

    ``ref_pair`` is ``(ref1, ref2)`` with ``ref2`` possibly ``None`` (then
    ``b = 0``). Samples may be WaveSample objects or plain values.
    ``max_rel_error_region`` is the largest fit residual inside ``region``
    (default: whole grid) relative to ``max |samples|``.

    Raises
    ------
    IllConditionedFit
        If the reference columns are nearly dependent on the grid.
    """
    vals = np.array([getattr(s, "psi", s) for s in samples], dtype=complex)
    grid = np.array([getattr(s, "q", i) for i, s in enumerate(samples)], dtype=float)
    ref1, ref2 = ref_pair
    cols = [np.asarray(ref1, dtype=complex)]
    if ref2 is not None:
        cols.append(np.asarray(ref2, dtype=complex))
    A = np.column_stack(cols)
    if A.shape[0] != vals.size:
        raise ValueError("samples and references must share the grid")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise IllConditionedFit("a reference solution vanishes on the grid")
    cond = np.linalg.cond(A / norms)
    if not cond < cond_limit:
        raise IllConditionedFit(f"reference pair nearly dependent (condition number {cond:.3g})")
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    resid = vals - A @ coef
    denom = np.linalg.norm(vals)
    rel = float(np.linalg.norm(resid) / denom) if denom > 0 else 0.0
    mask = np.ones(grid.size, bool) if region is None else (grid >= region[0]) & (grid <= region[1])
    peak = np.abs(vals).max()
    mre = float(np.abs(resid[mask]).max() / peak) if mask.any() and peak > 0 else 0.0
    a = complex(coef[0])
    b = complex(coef[1]) if len(coef) > 1 else 0j
    prof = [(float(x), float(abs(r))) for x, r in zip(grid, resid)]
    return ComparisonReport(grid, (a, b), rel, mre, prof, dict(metadata or {}))
