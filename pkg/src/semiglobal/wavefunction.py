"""Global semiclassical wavefunction from a single contour integral.

For real q the wavefunction on sheet ``sigma = +-1`` is

    psi(q) = exp(-i sigma S(q)/hbar) * phi(q),
    phi(q) = int_path exp(2i sigma S(q - s**2)/hbar) ds,

with the action continued along the image ``r = q - s**2`` of the
integration path. Along a descent path through ``s = 0`` the integral is
dominated by the neighbourhood of the origin and reproduces
``sqrt(pi hbar / 2) exp(-i sigma pi/4) g**-0.5 exp(i sigma S/hbar)`` away
from turning points, while remaining finite at them.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._panels import G_WEIGHTS, GK_WEIGHTS, integrate_line
from .action import ProblemContext, _allowed_direction, action_real, momentum, walk
from .contour import (ACTION_TOL, ContourPath, Seed, _ray_curve, descent_path, path_clearance,
                      quartic_decay_rays, seed, singularities)
from .errors import (GridTooCoarse, NormalizationDegenerate, PathInvalid, QuadratureNoConvergence,
                     SemiglobalError)

TOL_QUAD = 1e-8
END_DECAY = 1e-8
NEGLIGIBLE = 1e-17


@dataclass(frozen=True)
class WaveSample:
    """One evaluated point.

    ``psi == exp(-1j * gauge_S / hbar) * phi * c_norm``. ``est_error`` is the
    quadrature error estimate of the integral normalized to its value at
    ``s = 0`` (that is, of ``phi * exp(-2i gauge_S/hbar)``). Samples of a
    combined solution carry ``sheet = 0`` and ``gauge_S = 0``.
    """

    q: float
    psi: complex
    phi: complex
    gauge_S: complex
    n_evals: int
    est_error: float
    trunc_radius: float
    sheet: int = 1
    path_id: str = ""
    c_norm: complex = 1.0


@dataclass(frozen=True)
class SampleFailure:
    """A grid point whose evaluation raised; the grid run continues past it."""

    q: float
    error: str
    kind: str


@dataclass
class Carry:
    """Continuation state ``(s, S, g)`` of the integrand; S carries the sheet sign."""

    s: complex
    S: complex
    g: complex
    seed: Seed


@dataclass(frozen=True)
class PhiDiagnostics:
    n_evals: int
    est_error: float
    trunc_radius: float
    integral: complex      # phi normalized by its s = 0 value
    gauge_S: complex


def integrand(ctx: ProblemContext, q: float, s: complex, carry: Carry | None = None,
              sheet: int = 1) -> tuple[complex, Carry]:
    """``exp(2i sigma S(q - s**2)/hbar)`` continued from the carry (or from
    ``s = 0``) along a straight step to ``s``."""
    if carry is None:
        sd = seed(ctx, q, sheet)
        carry = Carry(0j, sd.S0, sd.g0, sd)
    sd = carry.seed
    if s != carry.s:
        hint = sd.hint(ctx, carry.s + 1e-3 * (s - carry.s)) if carry.g == 0 else None
        res = walk(ctx, _ray_curve(q, complex(carry.s), complex(s)), carry.S, carry.g,
                   ACTION_TOL * ctx.hbar, g_hint=hint)
        carry = Carry(complex(s), res.S, res.g, sd)
    return complex(np.exp(2j * carry.S / ctx.hbar)), carry


class _Accumulator:
    """Gauss-Kronrod sums over the panels accepted by the action walker."""

    def __init__(self, ctx, sd, tol, fmax=1.0):
        self.ctx, self.sd, self.tol = ctx, sd, tol
        self.total, self.err, self.fmax = 0j, 0.0, fmax
        self.n_evals, self.last_F, self.radius = 0, 1.0, 0.0

    def run(self, q, a, b, S, g, hint):
        d = b - a

        def visit(t0, t1, half, panel):
            F = np.exp(2j * (panel.S_query[:15] - self.sd.S0) / self.ctx.hbar) * (d * half)
            k, gsum = GK_WEIGHTS @ F, G_WEIGHTS @ F
            e = abs(k - gsum)
            self.n_evals += 15
            if e > max(self.tol * (t1 - t0), 1e-15 * self.fmax * abs(d) * (t1 - t0)):
                return "split"
            self.total += k
            self.err += e
            fm = float(np.abs(F).max() / max(abs(d * half), 1e-300))
            self.fmax = max(self.fmax, fm)
            self.last_F = abs(np.exp(2j * (panel.S_query[-1] - self.sd.S0) / self.ctx.hbar))
            self.radius = max(self.radius, abs(a + t1 * d))
            ex0 = (2j * panel.S_query[0]).real
            ex1 = (2j * panel.S_query[-1]).real
            if fm < NEGLIGIBLE * self.fmax and ex1 < ex0:
                return "stop"
            return "accept"

        res = walk(self.ctx, _ray_curve(q, a, b), S, g, ACTION_TOL * self.ctx.hbar,
                   g_hint=hint, visit=visit)
        self.n_evals += res.n_evals
        return res


def _closest_on_path(pts):
    best = (np.inf, 0, 0j)
    for k, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
        d = b - a
        t = 0.0 if d == 0 else min(1.0, max(0.0, (-a * np.conj(d)).real / abs(d) ** 2))
        p = a + t * d
        if abs(p) < best[0]:
            best = (abs(p), k, p)
    return best[1], best[2]


def _integrate_branch(acc, q, sd, start, S, g, pts):
    """Integrate along the polyline ``start -> pts[0] -> pts[1] ...``."""
    ahead = next((b for b in pts if b != start), start)
    hint = sd.hint(acc.ctx, 1e-3 * (ahead - start)) if g == 0 else None
    a = start
    for b in pts:
        if b == a:
            continue
        res = acc.run(q, a, b, S, g, hint)
        hint = None
        if res.stopped:
            return
        S, g, a = res.S, res.g, b
    if acc.last_F > END_DECAY * acc.fmax:
        raise PathInvalid(f"integrand has not decayed at the path end (|F| = {acc.last_F:.3g})")


def evaluate_phi(ctx: ProblemContext, q: float, path: ContourPath,
                 tol_quad: float = TOL_QUAD) -> tuple[complex, PhiDiagnostics]:
    """Contour integral ``phi(q)`` along ``path`` on the path's sheet.

    The action is seeded at ``s = 0`` from :func:`action_real`, continued
    along a straight spur to the path point nearest the origin and from
    there in both directions along the path. A point-symmetric path through
    the origin is integrated over one half and doubled.

    Raises
    ------
    PathInvalid
        If the path comes closer to a singularity than half its recorded
        clearance, or an end of the path lies where the integrand has not
        decayed.
    QuadratureNoConvergence, BranchAmbiguous
        From the adaptive quadrature and the action continuation.
    """
    sd = seed(ctx, q, path.sheet)
    pts = [complex(p) for p in path.waypoints]
    if len(pts) < 2:
        raise PathInvalid("path needs at least two waypoints")
    sing = singularities(ctx, q)
    clearance = path_clearance(pts, sing.points, skip_origin=sd.at_turning_point)
    if clearance < 0.5 * path.clearance or clearance < 1e-12:
        raise PathInvalid(f"path passes within {clearance:.3g} of a singularity at q={q}")
    k, p0 = _closest_on_path(pts)
    S, g = sd.S0, sd.g0
    acc_f = _Accumulator(ctx, sd, tol_quad)
    if p0 != 0:
        hint = sd.hint(ctx, 1e-3 * p0)
        res = walk(ctx, _ray_curve(q, 0j, p0), S, g, ACTION_TOL * ctx.hbar, g_hint=hint)
        S, g = res.S, res.g
        acc_f.n_evals += res.n_evals
    _integrate_branch(acc_f, q, sd, p0, S, g, pts[k + 1:])
    if path.is_symmetric and p0 == 0:
        integral, err, n_ev, radius = 2 * acc_f.total, 2 * acc_f.err, acc_f.n_evals, acc_f.radius
    else:
        acc_b = _Accumulator(ctx, sd, tol_quad, acc_f.fmax)
        _integrate_branch(acc_b, q, sd, p0, S, g, pts[k::-1])
        integral = acc_f.total - acc_b.total
        err = acc_f.err + acc_b.err
        n_ev = acc_f.n_evals + acc_b.n_evals
        radius = max(acc_f.radius, acc_b.radius)
    if err > 10 * tol_quad * (1.0 + abs(integral)) * max(1, len(pts) - 1):
        raise QuadratureNoConvergence(f"quadrature error {err:.3g} above tolerance at q={q}")
    phi = np.exp(2j * sd.S0 / ctx.hbar) * integral
    return complex(phi), PhiDiagnostics(n_ev, err, radius, complex(integral), sd.S0)


def evaluate_psi(ctx: ProblemContext, q: float, path: ContourPath, tol_quad: float = TOL_QUAD,
                 c_norm: complex = 1.0) -> WaveSample:
    """``psi = c_norm * exp(-i gauge_S/hbar) * phi`` with ``gauge_S = sigma S(q)``."""
    phi, diag = evaluate_phi(ctx, q, path, tol_quad)
    # evaluated without forming phi so that large forbidden-region exponents cancel
    psi = c_norm * np.exp(1j * diag.gauge_S / ctx.hbar) * diag.integral
    return WaveSample(float(q), complex(psi), phi, diag.gauge_S, diag.n_evals, diag.est_error,
                      diag.trunc_radius, path.sheet, path.path_id, c_norm)


def _threads(max_workers):
    if max_workers is not None:
        return max(1, int(max_workers))
    env = os.environ.get("SEMIGLOBAL_THREADS", "")
    return max(1, int(env)) if env.strip().isdigit() else 1


def psi_grid(ctx: ProblemContext, grid, strategy: str = "auto_per_q", path: ContourPath | None = None,
             sheet: int = 1, tol_quad: float = TOL_QUAD, max_workers: int | None = None) -> list:
    """Evaluate psi on a sorted real grid.

    ``auto_per_q`` builds a fresh descent path at every q; ``frozen_path``
    uses ``path`` throughout and reports clearance violations per point.
    Each entry of the result is a :class:`WaveSample` or, for points whose
    evaluation failed, a :class:`SampleFailure`. Points are independent and
    are evaluated on up to ``max_workers`` threads (default from the
    ``SEMIGLOBAL_THREADS`` environment variable, else 1); the output order
    follows the grid.
    """
    grid = [float(q) for q in grid]
    if any(b < a for a, b in zip(grid[:-1], grid[1:])):
        raise ValueError("grid must be sorted")
    if strategy == "frozen_path":
        if path is None:
            raise ValueError("frozen_path needs a path")
    elif strategy != "auto_per_q":
        raise ValueError(f"unknown strategy {strategy!r}")

    def one(q):
        try:
            p = path if strategy == "frozen_path" else descent_path(ctx, q, sheet)
            return evaluate_psi(ctx, q, p, tol_quad)
        except SemiglobalError as exc:
            return SampleFailure(q, str(exc), type(exc).__name__)

    n = _threads(max_workers)
    if n == 1 or len(grid) < 2:
        return [one(q) for q in grid]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(one, grid))


# ---------------------------------------------------------------- connection


@dataclass(frozen=True)
class _Crossing:
    location: float
    forbidden_left: bool
    sub: int     # sheet that is subdominant in the adjacent forbidden region
    mu: complex  # connection multiplier


def _crossings(ctx: ProblemContext) -> list[_Crossing]:
    out = []
    for tp in ctx.real_turning_points:
        if tp.multiplicity != 1:
            continue
        qt = tp.location.real
        u = _allowed_direction(ctx, qt)
        side = action_real(ctx, qt + 1e-6 * u * max(1.0, abs(qt)), tol=ACTION_TOL)
        eps = 1 if side.g.real >= 0 else -1
        tau = 1.0 if u > 0 else -1.0
        St = action_real(ctx, qt, tol=ACTION_TOL).S
        mu = tau * eps * np.exp(-2j * eps * St / ctx.hbar)
        out.append(_Crossing(qt, u > 0, -eps, complex(mu)))
    return sorted(out, key=lambda c: c.location)


def stokes_coefficients(ctx: ProblemContext, grid) -> np.ndarray:
    """Coefficients ``(c_plus, c_minus)`` per grid point of the combination of
    the two sheet solutions that stays subdominant in unbounded forbidden
    regions.

    The coefficients are constant between real simple turning points and
    jump there by the connection rule: entering an allowed region from a
    forbidden one adds ``mu`` times the subdominant coefficient to the
    dominant one, leaving it subtracts the same amount. A point exactly at a
    turning point takes the allowed-side value.
    """
    cross = _crossings(ctx)
    idx = {1: 0, -1: 1}
    c = np.array([0.0, 1.0], dtype=complex)
    if cross and cross[0].forbidden_left:
        c[:] = 0
        c[idx[cross[0].sub]] = 1.0
    states = [c.copy()]
    for cr in cross:
        a_i, b_i = idx[cr.sub], idx[-cr.sub]
        c = c.copy()
        if cr.forbidden_left:
            c[b_i] = c[b_i] + cr.mu * c[a_i]
        else:
            c[b_i] = c[b_i] - cr.mu * c[a_i]
        states.append(c)
    out = np.empty((len(grid), 2), dtype=complex)
    locs = [cr.location for cr in cross]
    for i, q in enumerate(grid):
        j = int(np.searchsorted(locs, q, side="left"))
        if j < len(locs) and q == locs[j] and cross[j].forbidden_left:
            j += 1  # at the turning point itself: allowed side, here the right
        out[i] = states[j]
    return out


def connected_solution(ctx: ProblemContext, grid, samples_plus=None, samples_minus=None,
                       tol_quad: float = TOL_QUAD, max_workers: int | None = None) -> list:
    """Combination of the two sheet solutions that decays into every
    unbounded forbidden region; see :func:`stokes_coefficients`."""
    plus = samples_plus if samples_plus is not None else psi_grid(ctx, grid, sheet=1, tol_quad=tol_quad,
                                                                  max_workers=max_workers)
    minus = samples_minus if samples_minus is not None else psi_grid(ctx, grid, sheet=-1, tol_quad=tol_quad,
                                                                     max_workers=max_workers)
    coef = stokes_coefficients(ctx, grid)
    out = []
    for q, sp, sm, (cp, cm) in zip(grid, plus, minus, coef):
        bad = [s for s, c in ((sp, cp), (sm, cm)) if isinstance(s, SampleFailure) and c != 0]
        if bad:
            out.append(SampleFailure(float(q), bad[0].error, bad[0].kind))
            continue
        parts = [(c, s) for c, s in ((cp, sp), (cm, sm)) if c != 0]
        psi = sum(c * s.psi for c, s in parts)
        out.append(WaveSample(float(q), complex(psi), complex(psi), 0j,
                              sum(s.n_evals for _, s in parts),
                              sum(abs(c) * s.est_error for c, s in parts),
                              max(s.trunc_radius for _, s in parts), 0, "conn"))
    return out


# ---------------------------------------------------------------- pairs


@dataclass(frozen=True)
class SolutionPair:
    samples_1: list
    samples_2: list
    wronskian_profile: list
    w_median: complex
    constancy: float       # max relative deviation of W from its median
    independent: bool
    w_tol: float = 0.05

    @property
    def constant(self) -> bool:
        return self.constancy <= self.w_tol


def _derivative4(psi, h):
    return (psi[:-4] - 8 * psi[1:-3] + 8 * psi[3:-1] - psi[4:]) / (12 * h)


def _uniform_step(q):
    h = np.diff(q)
    if len(h) == 0 or not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform")
    return float(h[0])


def wronskian_check(pair, w_tol: float = 0.05, w_indep: float = 1e-3, breaks=()) -> SolutionPair:
    """Wronskian ``psi1 psi2' - psi1' psi2`` by fourth-order central differences.

    ``constancy`` is the largest relative deviation of W from its median over
    the interior points; the pair is independent when ``|median W|`` exceeds
    ``w_indep`` times the median size of the two products making up W.
    Stencils whose span contains one of ``breaks`` are skipped: per-point
    descent contours change homotopy class at real turning points, so a
    sheet solution is only piecewise analytic there.

    Raises
    ------
    GridTooCoarse
        For fewer than five grid points, or when every stencil straddles a
        break.
    """
    s1, s2 = pair
    if len(s1) != len(s2):
        raise ValueError("samples must share a grid")
    if len(s1) < 5:
        raise GridTooCoarse("the Wronskian needs at least 5 grid points")
    q = np.array([s.q for s in s1])
    if not np.allclose(q, [s.q for s in s2]):
        raise ValueError("samples must share a grid")
    h = _uniform_step(q)
    p1 = np.array([s.psi for s in s1])
    p2 = np.array([s.psi for s in s2])
    d1, d2 = _derivative4(p1, h), _derivative4(p2, h)
    a, b = p1[2:-2] * d2, d1 * p2[2:-2]
    keep = np.ones(a.size, bool)
    for br in breaks:
        keep &= ~((q[:-4] <= br) & (br <= q[4:]))
    if not keep.any():
        raise GridTooCoarse("every Wronskian stencil straddles a turning point")
    a, b, centers = a[keep], b[keep], q[2:-2][keep]
    W = a - b
    med = complex(np.median(W.real), np.median(W.imag))
    size = float(np.median(np.abs(a) + np.abs(b)))
    dev = float(np.max(np.abs(W - med)) / abs(med)) if med != 0 else np.inf
    profile = [(float(x), complex(w)) for x, w in zip(centers, W)]
    return SolutionPair(list(s1), list(s2), profile, med, dev, abs(med) > w_indep * size, w_tol)


def solution_pair(ctx: ProblemContext, grid, tol_quad: float = TOL_QUAD,
                  max_workers: int | None = None, w_tol: float = 0.05) -> SolutionPair:
    """The two sheet solutions on ``grid`` and their Wronskian."""
    plus = psi_grid(ctx, grid, sheet=1, tol_quad=tol_quad, max_workers=max_workers)
    minus = psi_grid(ctx, grid, sheet=-1, tol_quad=tol_quad, max_workers=max_workers)
    failed = [s for s in plus + minus if isinstance(s, SampleFailure)]
    if failed:
        raise SemiglobalError(f"{len(failed)} samples failed, first at q={failed[0].q}: {failed[0].error}")
    breaks = [t.location.real for t in ctx.real_turning_points]
    return wronskian_check((plus, minus), w_tol=w_tol, breaks=breaks)


# ---------------------------------------------------------------- normalization


def _scaled(samples, c):
    return [replace(s, psi=s.psi * c, c_norm=s.c_norm * c) for s in samples]


def normalize(samples, convention: str = "wkb_match", *, ctx: ProblemContext | None = None,
              q_ref: float | None = None, branch: int | None = None) -> list:
    """Scale all samples by one complex constant.

    ``max_abs_one`` makes ``max |psi| = 1``; ``l2_unit`` makes the trapezoid
    norm over the sample grid 1; ``wkb_match`` makes ``psi(q_ref)`` equal to
    the WKB value there (``ctx`` required). ``q_ref`` defaults to the grid
    point of largest ``|g|``, among classically allowed points if there are
    any, and ``branch`` to the samples' sheet (``+1`` for
    combined solutions).

    Raises
    ------
    NormalizationDegenerate
        If the reference value is zero.
    """
    samples = list(samples)
    if not samples:
        return []
    psi = np.array([s.psi for s in samples])
    if convention == "max_abs_one":
        m = float(np.abs(psi).max())
        if m == 0:
            raise NormalizationDegenerate("all samples vanish")
        return _scaled(samples, 1.0 / m)
    if convention == "l2_unit":
        q = np.array([s.q for s in samples])
        norm = float(np.sqrt(np.trapezoid(np.abs(psi) ** 2, q))) if len(q) > 1 else 0.0
        if norm == 0:
            raise NormalizationDegenerate("zero L2 norm")
        return _scaled(samples, 1.0 / norm)
    if convention == "wkb_match":
        from .reference import wkb

        if ctx is None:
            raise ValueError("wkb_match needs the problem context")
        q = np.array([s.q for s in samples])
        if q_ref is None:
            g = np.abs(momentum(ctx, q.astype(complex)))
            allowed = np.real(ctx.E - ctx.spec.value(q)) > 0
            if allowed.any():
                g = np.where(allowed, g, -1.0)
            i = int(np.argmax(g))
        else:
            i = int(np.argmin(np.abs(q - q_ref)))
        ref = samples[i]
        if ref.psi == 0:
            raise NormalizationDegenerate(f"psi vanishes at q_ref={ref.q}")
        br = branch if branch is not None else (ref.sheet if ref.sheet != 0 else 1)
        return _scaled(samples, wkb(ctx, ref.q, br) / ref.psi)
    raise ValueError(f"unknown normalization convention {convention!r}")


# ---------------------------------------------------------------- quadratic mode


@dataclass(frozen=True)
class QuadraticMode:
    """Quartic truncation ``exp(i (a s**4 + b s**2))`` of the integrand at q."""

    q: float
    a: float
    b: float
    integral: complex
    est_error: float


def quartic_integral(a: float, b: float, tol: float = 1e-13) -> tuple[complex, float]:
    """``int exp(i (a s**4 + b s**2)) ds`` over the real line, ``a != 0``,
    evaluated along the two quartic decay rays."""
    if a == 0:
        raise ValueError("quartic coefficient must be nonzero")
    if a < 0:
        val, err = quartic_integral(-a, -b, tol)
        return complex(np.conj(val)), err
    th_in, th_out = quartic_decay_rays()
    f = lambda s: np.exp(1j * (a * s**4 + b * s * s))
    total, err = 0j, 0.0
    for th, sign in ((th_out, 1.0), (th_in, -1.0)):
        u = np.exp(1j * th)
        R = 1.0
        while (1j * (a * (R * u) ** 4 + b * (R * u) ** 2)).real > -45 or R < (abs(b) / a) ** 0.5:
            R *= 1.25
        val, e, _ = integrate_line(f, 0j, R * u, tol)
        total += sign * val
        err += e
    return total, err


def quadratic_mode(ctx: ProblemContext, q: float) -> QuadraticMode:
    """Expand the integrand exponent to fourth order in s around ``s = 0``:
    ``2i (S(q - s**2) - S(q))/hbar ~ i (a s**4 + b s**2)`` with
    ``a = g'(q)/hbar`` and ``b = -2 g(q)/hbar`` on the base sheet."""
    av = action_real(ctx, q, tol=ACTION_TOL)
    g = av.g
    if abs(g) == 0:
        raise ValueError("the quartic expansion needs g(q) != 0")
    dg = -ctx.spec.derivative(q) / g
    if abs(g.imag) > 1e-12 * abs(g) or abs(complex(dg).imag) > 1e-12 * abs(dg):
        raise ValueError("the quartic expansion is defined in classically allowed regions")
    a, b = float(complex(dg).real) / ctx.hbar, -2.0 * float(g.real) / ctx.hbar
    val, err = quartic_integral(a, b)
    return QuadraticMode(float(q), a, b, val, err)
