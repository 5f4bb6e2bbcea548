"""Classical momentum and action continued along complex paths.

The action ``S(z) = int_anchor^z g(r) dr`` with ``g = sqrt(2(E - V))`` is
multivalued; it is made definite by following one continuous branch of g
along the path. On the real axis, real turning points between the anchor and
the target are bypassed through small semicircles in the upper half plane,
which fixes ``g = +i|g|`` in a forbidden region to the left of an allowed one
and ``g = -i|g|`` to the right of it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._panels import N_CHEB, panel_nodes, principal_sqrt, track_panel
from .errors import BranchAmbiguous, QuadratureNoConvergence
from .potential import ROOT_TOL, PotentialSpec, TurningPoint, turning_points

MAX_DEPTH = 52
MAX_PANELS = 20000


@dataclass(frozen=True)
class ProblemContext:
    """Everything shared by the evaluations of one problem.

    Build it with :func:`make_context`, which caches the turning points and
    applies the default anchor rule.
    """

    spec: PotentialSpec
    E: float
    hbar: float
    anchor: complex
    turning_points: tuple = field(default=())
    anchor_is_turning_point: bool = False
    delta_branch: float = 1e-3

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def real_turning_points(self) -> list[TurningPoint]:
        scale = max(1.0, max((abs(t.location) for t in self.turning_points), default=1.0))
        return [t for t in self.turning_points if abs(t.location.imag) <= 1e-9 * scale]


@dataclass(frozen=True)
class ActionValue:
    """Result of an action continuation.

    ``g`` is the momentum at the endpoint on the continued branch and
    ``arg_g`` its argument followed continuously from the start, so that
    ``g ** -0.5`` can be taken on a consistent branch.
    """

    S: complex
    branch_parity: int
    path_length: float
    est_error: float
    g: complex = 0j
    arg_g: float = 0.0


def default_anchor(tps, domain_center: float = 0.0) -> complex:
    """Rightmost real turning point left of the domain center, else the
    leftmost real turning point, else 0."""
    scale = max(1.0, max((abs(t.location) for t in tps), default=1.0))
    real = sorted(t.location.real for t in tps if abs(t.location.imag) <= 1e-9 * scale)
    left = [x for x in real if x < domain_center]
    if left:
        return complex(left[-1])
    if real:
        return complex(real[0])
    return 0j


def make_context(spec: PotentialSpec, E: float, hbar: float, anchor=None,
                 domain=None, root_tol: float = ROOT_TOL) -> ProblemContext:
    """Build a :class:`ProblemContext`.

    Parameters
    ----------
    anchor : complex, optional
        Lower limit of the action integral. Defaults to the anchor rule of
        :func:`default_anchor` evaluated at the center of ``domain``.
    domain : (float, float), optional
        Real interval of interest; only its center is used.
    """
    tps = tuple(turning_points(spec, E, root_tol))
    center = 0.5 * (domain[0] + domain[1]) if domain is not None else 0.0
    if anchor is None:
        anchor = default_anchor(tps, center)
    anchor = complex(anchor)
    locs = [t.location for t in tps]
    spread = max((abs(a - b) for a in locs for b in locs), default=0.0)
    delta = 1e-3 * spread if spread > 0 else 1e-3
    scale = max(1.0, abs(anchor))
    is_tp = any(abs(anchor - z) <= 1e-9 * scale for z in locs)
    return ProblemContext(spec, float(E), float(hbar), anchor, tps, is_tp, delta)


def momentum(ctx: ProblemContext, z, branch_hint=None):
    """Classical momentum ``g`` with ``g**2 = 2(E - V(z))``.

    Without a hint the principal root is returned; with a hint, the root
    having nonnegative inner product with the hint.
    """
    g = principal_sqrt(2.0 * (ctx.E - ctx.spec.value(z)))
    if branch_hint is None:
        return g
    return np.where((g * np.conj(branch_hint)).real < 0, -g, g) if np.ndim(g) else (
        -g if (g * np.conj(branch_hint)).real < 0 else g)


@dataclass
class WalkResult:
    S: complex
    g: complex
    error: float
    arg: float
    n_evals: int
    stopped: bool = False


def walk(ctx: ProblemContext, curve, S0: complex, g0: complex, tol_S: float,
         g_hint=None, visit=None, arg0=None) -> WalkResult:
    """Continue S and g along ``curve`` for parameter ``t`` in [0, 1].

    ``curve(t)`` returns ``(r, dr_dt)`` arrays. Panels are bisected until the
    branch is unambiguous and the Chebyshev tail of ``g dr`` is below
    ``tol_S`` times the square root of the panel length; the square root keeps
    the refinement shallow next to a turning point, where ``g`` has a
    square-root singularity. ``visit(t0, t1, half, panel)`` may return
    ``"split"`` to request refinement or ``"stop"`` to end the walk early
    after accepting the panel. ``arg0`` defaults to ``angle(g0)``, or to the
    angle at the first nonzero node when ``g0`` vanishes.
    """
    S, g = S0, g0
    arg = arg0 if arg0 is not None else (float(np.angle(g0)) if g0 != 0 else None)
    err, n_evals, n_panels = 0.0, 0, 0
    t0 = 0.0
    stack = [(1.0, 0)]
    while stack:
        t1, depth = stack[-1]
        t_cheb, _, half = panel_nodes(t0, t1)
        r, dr = curve(t_cheb)
        res = track_panel(ctx.spec, ctx.E, r, dr * half, S, g, g_hint if t0 == 0.0 else None)
        n_evals += N_CHEB + 1
        n_panels += 1
        if n_panels > MAX_PANELS:
            raise QuadratureNoConvergence("panel budget exhausted while continuing the action")
        verdict = "accept"
        if res.ambiguous:
            verdict = "split"
        elif res.tail > tol_S * np.sqrt(t1 - t0) + 1e-15 * (1.0 + abs(S)):
            verdict = "split"
        elif visit is not None:
            verdict = visit(t0, t1, half, res) or "accept"
        if verdict == "split":
            if depth >= MAX_DEPTH:
                if res.ambiguous:
                    raise BranchAmbiguous(f"branch undetermined near r={complex(r[0])}")
                raise QuadratureNoConvergence(f"action panel did not converge near r={complex(r[0])}")
            stack.append((0.5 * (t0 + t1), depth + 1))
            continue
        stack.pop()
        err += res.tail
        if arg is None:
            arg = float(np.angle(res.g_end)) - res.arg_step
        arg += res.arg_step
        S, g, t0 = complex(res.S_query[-1]), res.g_end, t1
        if verdict == "stop":
            return WalkResult(S, g, err, arg, n_evals, True)
    return WalkResult(S, g, err, arg if arg is not None else 0.0, n_evals)


def _segment_curve(a: complex, b: complex):
    d = b - a
    return lambda t: (a + t * d, np.full(np.shape(t), d, dtype=complex))


def _initial_branch(ctx: ProblemContext, start: complex, first_step: complex):
    """(g0, hint, arg0) at a path start; a turning-point start takes the
    principal branch just beyond it along ``first_step``."""
    if ctx.anchor_is_turning_point and abs(start - ctx.anchor) <= 1e-12 * max(1.0, abs(start)):
        probe = start + 1e-9 * first_step / max(abs(first_step), 1e-300)
        return 0j, complex(momentum(ctx, probe)), None
    g0 = complex(momentum(ctx, start))
    return g0, None, float(np.angle(g0)) if g0 != 0 else None


def action_along_path(ctx: ProblemContext, path, tol: float = 1e-10) -> ActionValue:
    """Action along a polyline that starts at ``ctx.anchor``.

    Raises
    ------
    BranchAmbiguous
        When the path grazes a turning point so closely that the branch
        cannot be resolved.
    QuadratureNoConvergence
        When refinement fails to reach the tolerance.
    """
    pts = [complex(p) for p in path]
    if not pts:
        raise ValueError("path must contain at least the anchor")
    if abs(pts[0] - ctx.anchor) > 1e-12 * max(1.0, abs(ctx.anchor)):
        raise ValueError("path must start at the context anchor")
    S, length, err = 0j, 0.0, 0.0
    if len(pts) == 1 or all(p == pts[0] for p in pts):
        g0, _, arg = _initial_branch(ctx, pts[0], 1.0)
        return ActionValue(0j, 0, 0.0, 0.0, g0, arg or 0.0)
    first = next(p for p in pts[1:] if p != pts[0])
    g, hint, arg = _initial_branch(ctx, pts[0], first - pts[0])
    for a, b in zip(pts[:-1], pts[1:]):
        if a == b:
            continue
        res = walk(ctx, _segment_curve(a, b), S, g, tol * (1.0 + abs(S)),
                   g_hint=hint, arg0=arg)
        S, g, arg, err = res.S, res.g, res.arg, err + res.error
        hint = None
        length += abs(b - a)
    principal = complex(momentum(ctx, pts[-1]))
    parity = 0 if (principal * np.conj(g)).real >= 0 else 1
    return ActionValue(S, parity, length, err, g, arg)


def _allowed_direction(ctx: ProblemContext, q_t: float) -> float:
    """+1 if the classically allowed side of a real turning point is to the right."""
    d = float(np.real(ctx.spec.derivative(q_t)))
    if d != 0:
        return 1.0 if d < 0 else -1.0
    eps = 1e-3 * max(1.0, abs(q_t))
    return 1.0 if np.real(ctx.E - ctx.spec.value(q_t + eps)) >= 0 else -1.0


def _arc(center: float, radius: float, phi0: float, phi1: float, n: int = 8):
    phis = np.linspace(phi0, phi1, n + 1)
    # chords of the polygon stay outside the nominal radius
    rad = radius / np.cos(0.5 * abs(phi1 - phi0) / n)
    return [center + rad * np.exp(1j * p) for p in phis]


def real_axis_path(ctx: ProblemContext, q: float) -> list[complex]:
    """Polyline from the anchor to real ``q`` with upper-half-plane detours."""
    a = ctx.anchor
    q = float(q)
    delta = ctx.delta_branch
    pts = [a]
    if ctx.anchor_is_turning_point and abs(a.imag) == 0:
        u = _allowed_direction(ctx, a.real)
        if (q - a.real) * u < 0 and abs(q - a.real) > 0:
            # leave into the allowed side, then swing through the upper half plane
            phi0, phi1 = (0.0, np.pi) if u > 0 else (np.pi, 0.0)
            pts.extend(_arc(a.real, delta, phi0, phi1))
            pts[-1] = complex(a.real - u * delta)
    if q == a.real and a.imag == 0:
        return pts
    direction = 1.0 if q > pts[-1].real else -1.0
    start = pts[-1].real
    lo, hi = sorted((start, q))
    for tp in sorted((t.location.real for t in ctx.real_turning_points), key=lambda x: direction * x):
        if not (lo < tp < hi):
            continue
        radius = min(delta, 0.5 * abs(q - tp), 0.5 * abs(pts[-1].real - tp))
        if radius <= 1e-14 * max(1.0, abs(tp)):
            continue
        if direction > 0:
            arc = _arc(tp, radius, np.pi, 0.0)
        else:
            arc = _arc(tp, radius, 0.0, np.pi)
        pts.extend(arc)
        pts[-1] = complex(tp + direction * radius)
    pts.append(complex(q))
    return pts


def action_real(ctx: ProblemContext, q: float, tol: float = 1e-10) -> ActionValue:
    """Action from the anchor to real ``q`` along :func:`real_axis_path`."""
    return action_along_path(ctx, real_axis_path(ctx, q), tol)
