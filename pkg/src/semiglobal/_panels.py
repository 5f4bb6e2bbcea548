"""Panel engine shared by the action continuation and the contour quadrature.

A panel is a parameter interval ``[t0, t1]`` of a curve ``r(t)`` in the
complex coordinate plane. On each panel the momentum ``g(r) = sqrt(2(E - V))``
is sampled at Chebyshev-Lobatto nodes, its sign is chained from node to node
so that it stays on one continuous branch, and ``S = int g dr`` is obtained
from the Chebyshev interpolant. The same interpolant yields S at the
Gauss-Kronrod nodes used by the contour quadrature, so a panel is evaluated
once for both purposes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb

N_CHEB = 16
CHEB_NODES = -np.cos(np.pi * np.arange(N_CHEB + 1) / N_CHEB)

# Kronrod 15-point rule with its embedded 7-point Gauss rule on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:3], [_WG[3]], _WG[2::-1]])

_VALUES_TO_COEFFS = np.linalg.inv(cheb.chebvander(CHEB_NODES, N_CHEB))
_QUERY = np.concatenate([GK_NODES, [1.0]])


def _integration_matrix(points):
    """Matrix mapping node values to the running integral from -1 to ``points``."""
    cols = []
    for j in range(N_CHEB + 1):
        e = np.zeros(N_CHEB + 1)
        e[j] = 1.0
        cols.append(cheb.chebint(e, lbnd=-1))
    antideriv = np.array(cols).T
    return cheb.chebvander(points, N_CHEB + 1) @ antideriv @ _VALUES_TO_COEFFS


_INTEGRATE = _integration_matrix(_QUERY)


def principal_sqrt(w):
    """Square root with Re >= 0, and Im >= 0 when Re == 0."""
    r = np.sqrt(np.asarray(w, dtype=complex))
    flip = (r.real == 0) & (r.imag < 0)
    return np.where(flip, -r, r) if np.ndim(r) else (-r if flip else r)


@dataclass
class PanelResult:
    ambiguous: bool
    tail: float
    S_query: np.ndarray   # S at the 15 Kronrod nodes followed by the panel end
    g_end: complex
    arg_step: float       # continuous change of arg(g) across the panel


def track_panel(spec, E, r, dr, S0, g0, g_hint=None) -> PanelResult:
    """Continue the momentum branch and the action across one panel.

    Parameters
    ----------
    r, dr : ndarray
        Curve points and ``dr/dt`` (already scaled by ``(t1 - t0)/2``) at the
        Chebyshev-Lobatto nodes.
    S0, g0 : complex
        Action and momentum at the panel start (the carry).
    g_hint : complex, optional
        Used only when ``g0`` vanishes: the branch at the first nonzero node
        is the one closest to this value.
    """
    w = principal_sqrt(2.0 * (E - spec.value(r)))
    mag = np.abs(w)
    scale = mag.max()
    tiny = 1e-12 * scale
    start = 0
    if abs(g0) > tiny:
        if abs(w[0] - g0) > abs(w[0] + g0):
            w[0] = -w[0]
    elif g_hint is not None:
        start = 1
        if abs(w[1] - g_hint) > abs(w[1] + g_hint):
            w[1] = -w[1]
    dot = (w[1:] * np.conj(w[:-1])).real
    prod = mag[1:] * mag[:-1]
    resolved = prod > tiny * tiny
    ambiguous = bool(np.any(resolved & (np.abs(dot) < 0.5 * prod)))
    flips = np.where(resolved & (dot < 0), -1.0, 1.0)
    flips[:start] = 1.0
    sign = np.concatenate([[1.0], np.cumprod(flips)])
    g = w * sign
    h = g * dr
    coeffs = _VALUES_TO_COEFFS @ h
    tail = float(np.abs(coeffs[-3:]).max())
    S_query = S0 + _INTEGRATE @ h
    nz = np.abs(g) > tiny
    gz = g[nz]
    arg_step = float(np.sum(np.angle(gz[1:] / gz[:-1]))) if gz.size > 1 else 0.0
    return PanelResult(ambiguous, tail, S_query, complex(g[-1]), arg_step)


def panel_nodes(t0, t1):
    """Chebyshev-Lobatto and Kronrod parameter values on ``[t0, t1]``."""
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    return mid + half * CHEB_NODES, mid + half * GK_NODES, half


def integrate_line(f, a: complex, b: complex, tol: float = 1e-12, max_depth: int = 40):
    """Adaptive Gauss-Kronrod integral of an analytic ``f`` along ``a -> b``.

    Returns ``(value, est_error, n_evals)``; panels are bisected until the
    Kronrod-Gauss difference is below ``tol`` times the panel's share of the
    parameter interval, or below double-precision noise relative to the
    largest integrand value met so far.
    """
    d = b - a
    total, err, n_evals, fmax = 0j, 0.0, 0, 0.0
    t0 = 0.0
    stack = [(1.0, 0)]
    while stack:
        t1, depth = stack[-1]
        _, t_gk, half = panel_nodes(t0, t1)
        vals = f(a + t_gk * d) * d * half
        n_evals += 15
        fmax = max(fmax, float(np.abs(vals).max() / half))
        k, g = GK_WEIGHTS @ vals, G_WEIGHTS @ vals
        e = abs(k - g)
        if e > (t1 - t0) * max(tol, 1e-15 * fmax) and depth < max_depth:
            stack.append((0.5 * (t0 + t1), depth + 1))
            continue
        stack.pop()
        total += k
        err += e
        t0 = t1
    return total, err, n_evals
