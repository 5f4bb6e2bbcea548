"""Entire one-dimensional potentials, their turning points and real extrema.

Two families are supported: polynomials (given by ascending coefficients,
constants included so that free motion is expressible)
and the Morse potential ``D (1 - exp(-a (q - q0)))**2``. Both are entire, so
the only singularities of the classical momentum are branch points at the
turning points. Named presets expand to polynomials:

========================  ================================
grammar                   potential
========================  ================================
``poly:c0,c1,...``        ``c0 + c1 q + c2 q**2 + ...``
``free:``                 ``0`` (free motion)
``harmonic:omega``        ``omega**2 q**2 / 2``
``linear:F``              ``-F q``
``invharmonic:lambda``    ``-lambda**2 q**2 / 2``
``doublewell:a4,a2``      ``a4 q**4 - a2 q**2``
``morse:D,a,q0``          ``D (1 - exp(-a (q - q0)))**2``
========================  ================================
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidPotential, RootFindingFailed

ROOT_TOL = 1e-9
CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class TurningPoint:
    """A root of ``E - V(q)`` with its multiplicity."""

    location: complex
    multiplicity: int = 1


@dataclass(frozen=True)
class PotentialSpec:
    """Immutable description of an entire potential.

    Parameters
    ----------
    kind : {"polynomial", "morse"}
    coefficients : tuple of float
        Ascending polynomial coefficients (polynomial kind only).
    depth, width, center : float
        Morse parameters ``D``, ``a`` and ``q0`` (morse kind only).
    label : str
        Text the spec was parsed from; used as an identifier in reports.
    """

    kind: str
    coefficients: tuple = ()
    depth: float = 0.0
    width: float = 0.0
    center: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.kind == "polynomial":
            c = self.coefficients
            if len(c) < 1:
                raise InvalidPotential("polynomial needs at least one coefficient")
            if len(c) > 1 and c[-1] == 0:
                raise InvalidPotential("leading polynomial coefficient must be nonzero")
            if not all(np.isfinite(c)):
                raise InvalidPotential("polynomial coefficients must be finite")
        elif self.kind == "morse":
            if not (self.depth > 0 and self.width > 0 and np.isfinite(self.center)):
                raise InvalidPotential("morse needs D > 0, a > 0 and finite q0")
        else:
            raise InvalidPotential(f"unknown potential kind {self.kind!r}")

    @property
    def degree(self) -> int | None:
        """Polynomial degree, or None for Morse."""
        return len(self.coefficients) - 1 if self.kind == "polynomial" else None

    def value(self, z):
        """V(z) for scalar or array complex/real arguments."""
        if self.kind == "polynomial":
            return _horner(self.coefficients, z)
        u = 1.0 - np.exp(-self.width * (np.asarray(z) - self.center))
        return self.depth * u * u

    def derivative(self, z):
        """V'(z), the analytic derivative."""
        if self.kind == "polynomial":
            c = self.coefficients
            if len(c) < 2:
                return 0.0 * np.asarray(z)
            return _horner([k * c[k] for k in range(1, len(c))], z)
        e = np.exp(-self.width * (np.asarray(z) - self.center))
        return 2.0 * self.depth * self.width * e * (1.0 - e)

    def second_derivative(self, z):
        """V''(z)."""
        if self.kind == "polynomial":
            c = self.coefficients
            if len(c) < 3:
                return 0.0 * np.asarray(z)
            return _horner([k * (k - 1) * c[k] for k in range(2, len(c))], z)
        e = np.exp(-self.width * (np.asarray(z) - self.center))
        return 2.0 * self.depth * self.width**2 * e * (2.0 * e - 1.0)

    def __call__(self, z):
        return self.value(z)


def _horner(coeffs, z):
    z = np.asarray(z)
    acc = np.zeros_like(z, dtype=np.result_type(z, float)) + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc if acc.ndim else acc[()]


def polynomial(coefficients, label: str = "") -> PotentialSpec:
    coeffs = tuple(float(c) for c in coefficients)
    return PotentialSpec("polynomial", coeffs, label=label or "poly:" + ",".join(map(repr, coeffs)))


def morse(depth: float, width: float, center: float = 0.0) -> PotentialSpec:
    return PotentialSpec("morse", depth=float(depth), width=float(width), center=float(center),
                         label=f"morse:{depth!r},{width!r},{center!r}")


def parse_potential(text: str) -> PotentialSpec:
    """Parse the ``kind:args`` grammar described in the module docstring."""
    text = text.strip().strip('"').strip("'")
    if ":" not in text:
        raise InvalidPotential(f"potential {text!r} lacks a 'kind:' prefix")
    kind, _, args = text.partition(":")
    kind = kind.strip().lower()
    try:
        vals = [float(a) for a in args.split(",") if a.strip()]
    except ValueError as exc:
        raise InvalidPotential(f"non-numeric parameter in {text!r}") from exc

    def need(n):
        if len(vals) != n:
            raise InvalidPotential(f"{kind} expects {n} parameter(s), got {len(vals)}")

    if kind == "poly":
        return polynomial(vals, label=text)
    if kind == "free":
        need(0)
        return polynomial([0.0], label=text)
    if kind == "harmonic":
        need(1)
        return polynomial([0.0, 0.0, 0.5 * vals[0] ** 2], label=text)
    if kind == "linear":
        need(1)
        return polynomial([0.0, -vals[0]], label=text)
    if kind == "invharmonic":
        need(1)
        return polynomial([0.0, 0.0, -0.5 * vals[0] ** 2], label=text)
    if kind == "doublewell":
        need(2)
        return polynomial([0.0, 0.0, -vals[1], 0.0, vals[0]], label=text)
    if kind == "morse":
        need(3)
        spec = morse(*vals)
        return PotentialSpec("morse", depth=spec.depth, width=spec.width, center=spec.center, label=text)
    raise InvalidPotential(f"unknown potential kind {kind!r}")


def evaluate(spec: PotentialSpec, z):
    """V(z); real on the real axis for real coefficients."""
    return spec.value(z)


# ---------------------------------------------------------------- roots

def _durand_kerner(monic: np.ndarray, max_iter: int = 5000) -> tuple[np.ndarray, bool]:
    """All roots of a monic polynomial (ascending coefficients)."""
    n = len(monic) - 1
    radius = 1.0 + np.max(np.abs(monic[:-1]))
    z = radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(max_iter):
        p = _horner(monic, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        step = p / np.prod(diff, axis=1)
        z = z - step
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(z))):
            return z, True
    return z, False


def _newton_deflation(coeffs: np.ndarray) -> np.ndarray:
    """Fallback: Newton iteration with synthetic-division deflation."""
    work = np.array(coeffs, dtype=complex)
    roots = []
    while len(work) > 2:
        z = 0.4 + 0.9j
        for _ in range(500):
            p = _horner(work, z)
            dp = _horner([k * work[k] for k in range(1, len(work))], z)
            if dp == 0:
                z += 0.1 + 0.1j
                continue
            dz = p / dp
            z -= dz
            if abs(dz) <= 1e-15 * max(1.0, abs(z)):
                break
        roots.append(z)
        # deflate: divide by (x - z), coefficients are ascending
        desc = work[::-1]
        quot = np.zeros(len(desc) - 1, dtype=complex)
        acc = 0j
        for k in range(len(desc) - 1):
            acc = acc * z + desc[k]
            quot[k] = acc
        work = quot[::-1]
    roots.append(-work[0] / work[1])
    return np.array(roots)


def _polish(coeffs, z, order: int = 0):
    """Newton steps on the ``order``-th derivative of the polynomial."""
    c = np.array(coeffs, dtype=complex)
    for _ in range(order):
        c = np.array([k * c[k] for k in range(1, len(c))])
    dc = np.array([k * c[k] for k in range(1, len(c))]) if len(c) > 1 else np.zeros(1)
    for _ in range(20):
        d = _horner(dc, z)
        if d == 0:
            break
        step = _horner(c, z) / d
        z = z - step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return z


def _cluster(roots: np.ndarray):
    groups: list[list[complex]] = []
    for r in roots:
        for g in groups:
            if abs(r - np.mean(g)) <= CLUSTER_TOL * max(1.0, abs(r)):
                g.append(r)
                break
        else:
            groups.append([r])
    return [(complex(np.mean(g)), len(g)) for g in groups]


def _symmetrize(points, scale):
    """Snap near-real roots to the axis and make conjugate pairs exact."""
    out = []
    used = [False] * len(points)
    for i, (z, m) in enumerate(points):
        if used[i]:
            continue
        used[i] = True
        if abs(z.imag) <= 1e-10 * scale:
            out.append((complex(z.real, 0.0), m))
            continue
        for j in range(i + 1, len(points)):
            w, mw = points[j]
            if not used[j] and mw == m and abs(w - z.conjugate()) <= 1e-7 * scale:
                used[j] = True
                mid = 0.5 * (z + w.conjugate())
                out.append((mid, m))
                out.append((mid.conjugate(), m))
                break
        else:
            out.append((z, m))
    return out


def turning_points(spec: PotentialSpec, E: float, root_tol: float = ROOT_TOL) -> list[TurningPoint]:
    """All roots of ``E - V(q) = 0``, sorted by real then imaginary part.

    Polynomials yield every complex root; Morse roots are restricted to the
    principal strip ``|Im(q - q0)| <= pi / a``.
    """
    if not np.isfinite(E):
        raise ValueError("energy must be finite")
    scale = max(1.0, abs(E))
    if spec.kind == "morse":
        pts = _morse_roots(spec, E)
    else:
        coeffs = np.array(spec.coefficients, dtype=float)
        coeffs[0] -= E
        if len(coeffs) == 1:
            if coeffs[0] == 0:
                raise RootFindingFailed("every point is a turning point when E equals a constant potential")
            return []
        raw, ok = _durand_kerner(coeffs / coeffs[-1])
        if not ok or not np.all(np.isfinite(raw)):
            raw = _newton_deflation(coeffs)
        pts = []
        for z, m in _cluster(np.array([_polish(coeffs, r) for r in raw])):
            pts.append((complex(_polish(coeffs, z, m - 1)) if m > 1 else z, m))
        pts = _symmetrize(pts, max(1.0, max(abs(z) for z, _ in pts)))
    result = []
    for z, m in pts:
        resid = abs(E - spec.value(z))
        if not resid <= root_tol * scale:
            raise RootFindingFailed(f"root {z} has residual {resid:.3g} > {root_tol * scale:.3g}")
        result.append(TurningPoint(complex(z), int(m)))
    result.sort(key=lambda t: (round(t.location.real, 12), t.location.imag))
    return result


def _morse_roots(spec: PotentialSpec, E: float):
    root = np.sqrt(complex(E / spec.depth))
    if root == 0:
        return [(complex(spec.center), 2)]
    out = []
    for sign in (1.0, -1.0):
        w = 1.0 - sign * root
        if w == 0:
            continue  # root at infinity (E = D)
        out.append((complex(spec.center - np.log(w) / spec.width), 1))
    return out


def real_extrema(spec: PotentialSpec, interval) -> list[tuple[float, float, str]]:
    """Real critical points of V in ``[lo, hi]`` classified as min or max.

    Flat critical points are classified by the sign change of V'; points
    where V' does not change sign are not extrema and are omitted.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo <= hi:
        raise ValueError("interval must satisfy lo <= hi")
    if spec.kind == "morse":
        crit = [spec.center]
    else:
        c = spec.coefficients
        d = [k * c[k] for k in range(1, len(c))]
        if len(d) < 2:
            return []
        d = np.array(d, dtype=float)
        raw, ok = _durand_kerner(d / d[-1])
        if not ok:
            raw = _newton_deflation(d)
        scale = max(1.0, float(np.max(np.abs(raw))))
        crit = sorted(z.real for z, _ in _cluster(raw) if abs(z.imag) <= 1e-7 * scale)
    out = []
    for q in crit:
        if not lo <= q <= hi:
            continue
        curv = float(np.real(spec.second_derivative(q)))
        if abs(curv) > 1e-10:
            kind = "min" if curv > 0 else "max"
        else:
            eps = 1e-3 * max(1.0, abs(q))
            left = float(np.real(spec.derivative(q - eps)))
            right = float(np.real(spec.derivative(q + eps)))
            if left < 0 < right:
                kind = "min"
            elif left > 0 > right:
                kind = "max"
            else:
                continue
        out.append((float(q), float(np.real(spec.value(q))), kind))
    return out
