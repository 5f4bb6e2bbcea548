"""Decay sectors, singularities and integration paths in the s-plane.

For fixed real q the integrand ``exp(2i sigma S(q - s**2)/hbar)`` is entire
in s apart from branch points ``s_j = +-sqrt(q - q_t)`` at the turning
points q_t. The sign ``sigma = +-1`` selects the sheet: ``+1`` uses the
action as continued from the anchor, ``-1`` its negative.

The action along s-paths is always continued from ``s = 0``, whose image is
q itself, starting from the value returned by :func:`action_real`. Exponent
values reported here are relative to that starting value, so they measure
how much the integrand has decayed or grown compared to ``s = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._panels import principal_sqrt
from .action import ProblemContext, _allowed_direction, action_real, make_context, momentum, walk
from .errors import PathBlocked, SectorDegenerate
from .potential import TurningPoint, parse_potential

TAU_DECAY = 10.0
TRUNC_EXPONENT = -36.0
RAY_EXPONENT = -40.0
ROTATION_STEP = np.radians(2.5)
ACTION_TOL = 1e-12


@dataclass(frozen=True)
class Singularity:
    """Branch point ``s`` of the integrand with its source turning point.

    ``exponent`` is the local power of the action, ``(s - s_j)**exponent``:
    3/2 for a simple turning point and 2 for a double one.
    """

    s: complex
    source: TurningPoint
    exponent: float


@dataclass(frozen=True)
class SingularitySet:
    q: float
    items: tuple = ()

    @property
    def points(self) -> np.ndarray:
        return np.array([it.s for it in self.items], dtype=complex)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def singularities(ctx: ProblemContext, q: float) -> SingularitySet:
    """All ``s`` with ``q - s**2`` at a turning point, closed under ``s -> -s``."""
    items = []
    for tp in ctx.turning_points:
        root = complex(np.sqrt(complex(q) - tp.location))
        expo = (tp.multiplicity + 2) / 2
        if abs(root) <= 1e-12 * max(1.0, abs(tp.location)):
            items.append(Singularity(0j, tp, expo))
        else:
            items.extend([Singularity(root, tp, expo), Singularity(-root, tp, expo)])
    return SingularitySet(float(q), tuple(items))


def default_avoid_radius(sing: SingularitySet) -> float:
    """``max(1e-2, 0.05 * min pairwise |s_i - s_j|)``."""
    pts = sing.points
    if len(pts) < 2:
        return 1e-2
    diff = np.abs(pts[:, None] - pts[None, :])
    return max(1e-2, 0.05 * float(diff[~np.eye(len(pts), dtype=bool)].min()))


# ---------------------------------------------------------------- seeding


@dataclass(frozen=True)
class Seed:
    """Continuation state at ``s = 0`` on one sheet.

    ``arg_g`` is the continuous argument of the unsigned momentum at q;
    ``eps`` is the sign of the momentum on the allowed side when q is itself
    a turning point (``g0 == 0``).
    """

    q: float
    sheet: int
    S0: complex
    g0: complex
    arg_g: float
    at_turning_point: bool = False
    eps: float = 1.0
    allowed_arg: float = 0.0

    def hint(self, ctx: ProblemContext, s: complex):
        """Branch hint for the first node of a path leaving ``s = 0``."""
        if not self.at_turning_point:
            return None
        return self.sheet * self.eps * complex(principal_sqrt(2.0 * (ctx.E - ctx.spec.value(self.q - s * s))))


TP_FLOOR = 1e-7


def seed(ctx: ProblemContext, q: float, sheet: int = 1) -> Seed:
    av = action_real(ctx, q, tol=ACTION_TOL)
    scale = max(1.0, float(np.sqrt(abs(2.0 * ctx.E)) if ctx.E else 1.0))
    if abs(av.g) >= TP_FLOOR * scale:
        return Seed(float(q), sheet, sheet * av.S, sheet * av.g, av.arg_g)
    u = _allowed_direction(ctx, float(q))
    side = action_real(ctx, q + 1e-6 * u * max(1.0, abs(q)), tol=ACTION_TOL)
    eps = 1.0 if side.g.real >= 0 else -1.0
    return Seed(float(q), sheet, sheet * av.S, 0j, side.arg_g, True, eps, side.arg_g)


def _ray_curve(q: float, a: complex, b: complex):
    d = b - a

    def curve(t):
        s = a + t * d
        return q - s * s, -2.0 * s * d
    return curve


def _arc_curve(q: float, radius: float, alpha0: float, dalpha: float):
    def curve(t):
        s = radius * np.exp(1j * (alpha0 + t * dalpha))
        return q - s * s, -2j * dalpha * s * s
    return curve


def exponent(ctx: ProblemContext, sd: Seed, S) -> float:
    """Real part of ``2i sigma (S - S0)/hbar`` for an action on sheet ``sd.sheet``
    (``S`` already carries the sheet sign)."""
    return float((2j * (S - sd.S0) / ctx.hbar).real)


def ray_exponent(ctx: ProblemContext, sd: Seed, theta: float, R: float) -> float:
    """Exponent at ``s = R e^{i theta}`` continued along the ray from 0."""
    b = R * np.exp(1j * theta)
    res = walk(ctx, _ray_curve(sd.q, 0j, b), sd.S0, sd.g0, ACTION_TOL * ctx.hbar,
               g_hint=sd.hint(ctx, 1e-3 * b))
    return exponent(ctx, sd, res.S)


# ---------------------------------------------------------------- sectors


@dataclass(frozen=True)
class SectorMap:
    """Decay sectors of the integrand on a circle of radius ``radius``.

    ``samples`` holds ``(alpha, exponent)`` pairs with ``alpha`` in
    ``[0, 2 pi)``. Each sector is an interval ``(lo, hi)`` in radians with
    ``0 <= lo < 2 pi`` and ``lo < hi``; ``hi`` exceeds ``2 pi`` for a sector
    that wraps through angle 0.
    """

    radius: float
    samples: tuple
    sectors: tuple
    sheet: int = 1
    continuation: str = "ray"

    def __len__(self):
        return len(self.sectors)

    def mid(self, j: int) -> float:
        lo, hi = self.sectors[j]
        return float(np.mod(0.5 * (lo + hi), 2 * np.pi))

    def contains(self, j: int, alpha: float) -> bool:
        lo, hi = self.sectors[j]
        a = float(np.mod(alpha - lo, 2 * np.pi))
        return a <= hi - lo

    def index_of(self, alpha: float):
        for j in range(len(self.sectors)):
            if self.contains(j, alpha):
                return j
        return None


def _scan_exponents(ctx: ProblemContext, sd: Seed, R: float, n: int, continuation: str):
    alphas = 2 * np.pi * np.arange(n) / n
    tol = ACTION_TOL * ctx.hbar
    if continuation == "ray":
        return alphas, np.array([ray_exponent(ctx, sd, a, R) for a in alphas])
    if continuation != "circle":
        raise ValueError(f"unknown continuation {continuation!r}")
    res = walk(ctx, _ray_curve(sd.q, 0j, complex(R)), sd.S0, sd.g0, tol,
               g_hint=sd.hint(ctx, 1e-3 * R))
    S, g = res.S, res.g
    out = [exponent(ctx, sd, S)]
    step = 2 * np.pi / n
    for k in range(1, n):
        res = walk(ctx, _arc_curve(sd.q, R, alphas[k - 1], step), S, g, tol)
        S, g = res.S, res.g
        out.append(exponent(ctx, sd, S))
    return alphas, np.array(out)


def _runs(alphas, ex, tau):
    """Cyclic runs of negative exponent that dip below ``-tau``; boundaries at
    linearly interpolated zero crossings."""
    n = len(ex)
    neg = ex < 0
    if neg.all():
        return [(0.0, 2 * np.pi, list(range(n)))] if ex.min() < -tau else []
    if not neg.any():
        return []
    start = int(np.argmax(~neg))  # a non-negative sample to start from
    out = []
    k = 0
    step = 2 * np.pi / n
    while k < n:
        i = (start + k) % n
        if not neg[i]:
            k += 1
            continue
        members = []
        while k < n and neg[(start + k) % n]:
            members.append((start + k) % n)
            k += 1
        first, last = members[0], members[-1]
        before, after = (first - 1) % n, (last + 1) % n
        lo = alphas[first] - step * ex[first] / (ex[first] - ex[before])
        hi = alphas[last] + step * ex[last] / (ex[last] - ex[after])
        if last < first:
            hi += 2 * np.pi
        if min(ex[m] for m in members) < -tau:
            lo_w = float(np.mod(lo, 2 * np.pi))
            out.append((lo_w, lo_w + (hi - lo), members))
    out.sort(key=lambda r: r[0])
    return out


def scan_sectors(ctx: ProblemContext, q: float, R: float, n_angles: int = 128,
                 sheet: int = 1, continuation: str = "ray", tau: float = TAU_DECAY) -> SectorMap:
    """Classify the decay sectors of the integrand at radius ``R``.

    ``continuation="ray"`` continues the action from 0 straight out to each
    sampled point; ``"circle"`` goes out along the positive real s-axis and
    then around the circle, which follows the large-|s| asymptotics on a
    single sheet. A sector is a run of negative exponent containing a sample
    below ``-tau``; it is kept only if its deepest sample decays further at
    ``1.5 R``.

    Raises
    ------
    SectorDegenerate
        If no sector survives the monotonicity check.
    """
    if n_angles < 64:
        raise ValueError("n_angles must be at least 64")
    sd = seed(ctx, q, sheet)
    alphas, ex = _scan_exponents(ctx, sd, R, n_angles, continuation)
    runs = _runs(alphas, ex, tau)
    _, ex_far = _scan_exponents(ctx, sd, 1.5 * R, n_angles, continuation)
    sectors = []
    for lo, hi, members in runs:
        deepest = min(members, key=lambda m: ex[m])
        if ex_far[deepest] < ex[deepest]:
            sectors.append((lo, hi))
    if not sectors:
        raise SectorDegenerate(f"no decay sector is monotone at R={R}; increase the radius")
    samples = tuple((float(a), float(e)) for a, e in zip(alphas, ex))
    return SectorMap(float(R), samples, tuple(sectors), sheet, continuation)


def default_scan_radius(ctx: ProblemContext, q: float, sheet: int = 1) -> float:
    """Radius beyond the singularities where the exponent swing exceeds ``4 tau``."""
    sing = singularities(ctx, q)
    base = max(1.0, 2.0 * max((abs(s) for s in sing.points), default=0.0))
    sd = seed(ctx, q, sheet)
    R = base
    for _ in range(40):
        swing = max(abs(ray_exponent(ctx, sd, a, R)) for a in np.pi * np.arange(8) / 4 + np.pi / 8)
        if swing > 4 * TAU_DECAY:
            return R
        R *= 1.5
    return R


def truncation_radius(ctx: ProblemContext, q: float, sectors: SectorMap) -> float:
    """Smallest radius (at least twice the farthest singularity and the scan
    radius) where every sector midpoint has exponent below -36."""
    sing = singularities(ctx, q)
    R = max(sectors.radius, 2.0 * max((abs(s) for s in sing.points), default=0.0))
    sd = seed(ctx, q, sectors.sheet)
    for _ in range(60):
        if all(ray_exponent(ctx, sd, sectors.mid(j), R) < TRUNC_EXPONENT for j in range(len(sectors))):
            return R
        R *= 1.25
    raise SectorDegenerate("integrand does not decay to double precision in the sectors")


# ---------------------------------------------------------------- paths


@dataclass(frozen=True)
class ContourPath:
    """Directed polyline in the s-plane.

    ``sector_in``/``sector_out`` index the :class:`SectorMap` the path was
    built from, or are ``None`` for descent paths built without one.
    ``clearance`` is the smallest distance to a singularity, ignoring one at
    ``s = 0`` when the path starts its continuation there.
    """

    waypoints: tuple
    sector_in: int | None
    sector_out: int | None
    clearance: float
    sheet: int = 1
    q: float | None = None
    path_id: str = ""
    hint_eps: float = field(default=1.0, compare=False)

    def reversed(self) -> ContourPath:
        return ContourPath(tuple(self.waypoints[::-1]), self.sector_out, self.sector_in,
                           self.clearance, self.sheet, self.q, self.path_id + "~", self.hint_eps)

    @property
    def is_symmetric(self) -> bool:
        w = np.array(self.waypoints, dtype=complex)
        return len(w) % 2 == 1 and w[len(w) // 2] == 0 and np.allclose(w, -w[::-1], rtol=0, atol=1e-15)


def _segment_distance(a: complex, b: complex, c: complex) -> float:
    d = b - a
    if d == 0:
        return abs(c - a)
    t = min(1.0, max(0.0, ((c - a) * np.conj(d)).real / abs(d) ** 2))
    return abs(a + t * d - c)


def path_clearance(waypoints, points, skip_origin: bool = False) -> float:
    best = np.inf
    for c in points:
        if skip_origin and abs(c) == 0:
            continue
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            best = min(best, _segment_distance(a, b, c))
    return float(best)


def _arc_points(c: complex, rho: float, phi0: float, phi1: float, n: int):
    phis = np.linspace(phi0, phi1, n + 1)
    rad = rho / np.cos(0.5 * abs(phi1 - phi0) / n)
    return [c + rad * np.exp(1j * p) for p in phis[1:-1]]


def _detour(a: complex, b: complex, c: complex, rho: float, others, n_arc: int = 12):
    """Waypoints replacing segment a->b around the disk (c, rho), or None if
    the segment misses it."""
    d = b - a
    L = abs(d)
    u = d / L
    w = (c - a) / u
    if abs(w.imag) >= rho or not (-rho < w.real < L + rho):
        return None
    half = np.sqrt(rho * rho - w.imag ** 2)
    t_in, t_out = w.real - half, w.real + half
    if t_in <= 0 or t_out >= L:
        raise PathBlocked("path endpoint lies inside a singularity disk")
    p_in, p_out = a + t_in * u, a + t_out * u
    phi_in, phi_out = np.angle(p_in - c), np.angle(p_out - c)
    ccw = np.mod(phi_out - phi_in, 2 * np.pi)
    cw = ccw - 2 * np.pi
    options = sorted([(abs(ccw), ccw), (abs(cw), cw)], key=lambda o: (round(o[0], 12), -o[1]))
    for _, sweep in options:
        n = max(2, int(np.ceil(n_arc * abs(sweep) / np.pi)))
        arc = [p_in] + _arc_points(c, rho, phi_in, phi_in + sweep, n) + [p_out]
        if all(path_clearance(arc, [o]) >= r for o, r in others):
            return arc
    raise PathBlocked("singularity disks overlap across the path corridor")


def build_path(sectors: SectorMap, sing: SingularitySet, sector_in: int, sector_out: int,
               R_trunc: float, delta_avoid: float | None = None) -> ContourPath:
    """Polyline entering along the middle of ``sector_in``, passing through the
    origin and leaving along the middle of ``sector_out``, with arc detours
    around every singularity disk it meets."""
    n = len(sectors)
    for j in (sector_in, sector_out):
        if not 0 <= j < n:
            raise IndexError(f"sector index {j} out of range 0..{n - 1}")
    if sector_in == sector_out:
        raise ValueError("sector_in and sector_out must differ")
    if R_trunc < sectors.radius:
        raise ValueError("R_trunc must be at least the scan radius")
    rho = default_avoid_radius(sing) if delta_avoid is None else float(delta_avoid)
    disks = [(complex(c), rho) for c in sing.points]
    for i, (c1, _) in enumerate(disks):
        for c2, _ in disks[i + 1:]:
            if abs(c1 - c2) < 2 * rho:
                raise PathBlocked(f"singularity disks at {c1} and {c2} overlap; reduce delta_avoid")
    pts = [R_trunc * np.exp(1j * sectors.mid(sector_in)), 0j, R_trunc * np.exp(1j * sectors.mid(sector_out))]
    for k, (c, r) in enumerate(disks):
        others = [d for m, d in enumerate(disks) if m != k]
        out = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            arc = _detour(a, b, c, r, others)
            if arc is not None:
                out.extend(arc)
            out.append(b)
        pts = out
    clearance = path_clearance(pts, sing.points)
    return ContourPath(tuple(complex(p) for p in pts), sector_in, sector_out, clearance,
                       sectors.sheet, sing.q, f"s{sector_in}-{sector_out}")


# ---------------------------------------------------------------- descent rays


def _probe(ctx: ProblemContext, sd: Seed, theta: float, reach: float, R_start: float):
    """Walk out along the ray until the exponent drops below -40.

    Returns the radius reached, or None if the ray stops short of
    ``reach`` without decaying or starts growing.
    """
    u = np.exp(1j * theta)
    tol = ACTION_TOL * ctx.hbar
    state = {}

    def visit(t0, t1, half, panel):
        state["t"] = t1
        return "stop" if exponent(ctx, sd, panel.S_query[-1]) < RAY_EXPONENT else "accept"

    S, g, r0 = sd.S0, sd.g0, 0.0
    hint = sd.hint(ctx, 1e-3 * u * R_start)
    R = min(R_start, reach)
    for _ in range(12):
        res = walk(ctx, _ray_curve(sd.q, r0 * u, R * u), S, g, tol, g_hint=hint, visit=visit)
        hint = None
        if res.stopped:
            return r0 + state["t"] * (R - r0)
        S, g = res.S, res.g
        last = exponent(ctx, sd, S)
        if last > -RAY_EXPONENT or R >= reach:
            return None
        r0, R = R, min(2 * R, reach)
    return None


def _blockers(points, clear, theta: float, upto: float):
    u = np.exp(-1j * theta)
    out = []
    for k, c in enumerate(points):
        w = c * u
        if w.real > 0 and abs(w.imag) < clear[k] and abs(c) - clear[k] < upto:
            out.append(k)
    return out


def _crossed(points, reach: float, theta0: float, theta: float, exclude) -> bool:
    lo, hi = sorted((theta0, theta))
    for k, c in enumerate(points):
        if k in exclude or abs(c) == 0 or abs(c) > reach:
            continue
        a = np.angle(c * np.exp(-1j * lo))
        if 0 < np.mod(a, 2 * np.pi) < hi - lo:
            return True
    return False


def _turning_point_direction(ctx: ProblemContext, sd: Seed) -> float:
    """Steepest-descent direction at ``s = 0`` when q is a turning point."""
    theta_allowed = -sd.sheet * np.pi / 4 - sd.allowed_arg / 2
    thetas = np.linspace(-np.pi, np.pi, 1441)[:-1]
    d1 = float(np.real(ctx.spec.derivative(sd.q)))
    if d1 == 0:
        d1 = float(np.real(ctx.spec.second_derivative(sd.q)))
    P = principal_sqrt(2.0 * d1 * np.exp(2j * thetas))
    f = (-1j * sd.sheet * sd.eps * P * np.exp(2j * thetas)).real
    m = f.min()
    cands = thetas[f <= m + 1e-9 * abs(m)]
    dist = np.abs(np.angle(np.exp(1j * (cands - theta_allowed))))
    return float(cands[np.argmin(dist)])


def _rotation_sign(ctx: ProblemContext, sd: Seed, theta: float, c: complex, tp: complex) -> float:
    """-1 (clockwise) or +1 to turn the ray away from singularity ``c``."""
    side = (c * np.exp(-1j * theta)).imag
    if abs(side) > 1e-9 * abs(c):
        return -1.0 if side > 0 else 1.0
    # exactly aligned: follow the singularity as q moves into the upper half plane
    eta = 1e-6 * max(1.0, abs(sd.q))
    z = sd.q + 1j * eta
    g1 = complex(momentum(ctx, z, branch_hint=sd.g0 if sd.g0 != 0 else None))
    dtheta = -0.5 * float(np.angle(g1 / sd.g0)) if sd.g0 != 0 else 0.0
    roots = [np.sqrt(z - tp), -np.sqrt(z - tp)]
    c1 = min(roots, key=lambda r: abs(r - c))
    drift = float(np.angle(c1 * np.exp(-1j * (theta + dtheta))))
    return -1.0 if drift > 0 else 1.0


def descent_path(ctx: ProblemContext, q: float, sheet: int = 1, delta_avoid: float | None = None,
                 sectors: SectorMap | None = None) -> ContourPath:
    """Straight line through ``s = 0`` along the local steepest-descent direction.

    The direction is the stationary-phase one at ``s = 0`` on the requested
    sheet. If a singularity lies on the ray before the integrand has decayed,
    or the ray does not decay, the ray is rotated in steps of 2.5 degrees,
    away from the singularity and never across another one. The path is
    symmetric under ``s -> -s``, so the integral equals twice the integral
    over its outgoing half.

    Raises
    ------
    PathBlocked
        If no acceptable direction exists.
    """
    sd = seed(ctx, q, sheet)
    sing = singularities(ctx, q)
    pts = sing.points
    delta = default_avoid_radius(sing) if delta_avoid is None else float(delta_avoid)
    clear = [min(delta, 0.5 * abs(c)) for c in pts]
    scale = max(1.0, 2.0 * max((abs(c) for c in pts), default=0.0))
    reach = 64.0 * scale
    if sd.at_turning_point:
        theta0 = _turning_point_direction(ctx, sd)
    else:
        theta0 = -sheet * np.pi / 4 - sd.arg_g / 2
    nonzero = [k for k, c in enumerate(pts) if abs(c) > 0]
    pts_nz = [pts[k] for k in nonzero]
    clear_nz = [clear[k] for k in nonzero]
    sources = [sing.items[k].source.location for k in nonzero]

    def attempt(theta):
        R = _probe(ctx, sd, theta, reach, scale)
        if R is None:
            return None
        if _blockers(pts_nz, clear_nz, theta, R):
            return None
        return R

    dirs = (1.0, -1.0)
    block = _blockers(pts_nz, clear_nz, theta0, reach)
    if block:
        k = min(block, key=lambda m: abs(pts_nz[m]))
        dirs = (_rotation_sign(ctx, sd, theta0, pts_nz[k], sources[k]),)
    alive = dict.fromkeys(dirs, True)
    for k in range(0, 73):
        for d in dirs:
            if not alive[d]:
                continue
            theta = theta0 + d * k * ROTATION_STEP
            if k and _crossed(pts_nz, reach, theta0, theta, set(block)):
                alive[d] = False
                continue
            R = attempt(theta) if not (k == 0 and block) else None
            if R is not None:
                end = R * np.exp(1j * theta)
                wps = (-end, 0j, end)
                sec_in = sectors.index_of(theta + np.pi) if sectors is not None else None
                sec_out = sectors.index_of(theta) if sectors is not None else None
                clearance = path_clearance(wps, pts, skip_origin=True)
                tag = "+" if sheet > 0 else "-"
                return ContourPath(wps, sec_in, sec_out, clearance, sheet, float(q),
                                   f"sd{tag}{np.degrees(theta):.1f}", sd.eps)
            if k == 0:
                break
    raise PathBlocked(f"no decaying, unobstructed descent ray at q={q}")


def independent_pair(ctx: ProblemContext, q: float, sectors: SectorMap | None = None,
                     sing: SingularitySet | None = None) -> tuple[ContourPath, ContourPath]:
    """Descent paths on the two sheets; their integrals are the two
    WKB-like solutions ``~ g**-0.5 exp(+-iS/hbar)`` away from turning points."""
    return descent_path(ctx, q, 1, sectors=sectors), descent_path(ctx, q, -1, sectors=sectors)


def quartic_decay_rays(n_angles: int = 128) -> tuple[float, float]:
    """Entry and exit ray angles for integrals of ``exp(i t**4 + lower order)``
    deformed from the real line.

    The exponent ``i t**4`` is the integrand exponent of the inverted
    oscillator ``V = -r**2/2`` at its barrier top (``E = 0``, ``hbar = 1``,
    ``q = 0``), so the sector scanner is applied to that problem. The exit
    ray is the middle of the sector just counterclockwise of the positive
    real axis, the entry ray the middle of the one just counterclockwise of
    the negative real axis.
    """
    ctx = make_context(parse_potential("invharmonic:1"), 0.0, 1.0)
    step = np.pi / n_angles
    for sheet in (1, -1):
        sm = scan_sectors(ctx, 0.0, 2.0, n_angles, sheet=sheet, continuation="circle")
        j_out, j_in = sm.index_of(step), sm.index_of(np.pi + step)
        if j_out is not None and j_in is not None:
            return sm.mid(j_in), sm.mid(j_out)
    raise SectorDegenerate("quartic exponent has no decay sector next to the real axis")
