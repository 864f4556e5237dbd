"""Resolvent of the product law with distinct ratios ``y_1..y_M``.

``G`` solves ``1 - zG + G * prod_l (1 - y_l + z y_l G) = 0`` and is normalized
by ``G(z) ~ 1/z`` at infinity, i.e. ``G(z) = int rho(x) / (z - x) dx``. With
this normalization ``Im G < 0`` in the upper half-plane, so ``-G`` is the
Herglotz function and the density is ``-Im G(x + i0) / pi``.

The physical root is followed by continuation along a straight path from a
far point where it is the root closest to ``1/z``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import BranchTrackingError, DomainError

__all__ = [
    "GeneralParams", "StieltjesValue", "resolvent_residual", "resolvent_polynomial",
    "solve_G", "density_from_inversion", "density_with_residual", "moments_series", "detect_support",
    "inversion_grid", "inversion_moments", "INVERSION_STEPS",
]

INVERSION_STEPS = (1e-3, 5e-4, 2.5e-4)


@dataclass(frozen=True)
class GeneralParams:
    """Limiting ratios ``y_l`` of the factors, each in (0, 1]."""

    ratios: tuple

    def __post_init__(self):
        rs = tuple(float(v) for v in self.ratios)
        if not rs:
            raise DomainError("ratios must be nonempty")
        for v in rs:
            if not 0.0 < v <= 1.0:
                raise DomainError(f"every ratio must lie in (0, 1], got {v!r}")
        object.__setattr__(self, "ratios", rs)

    @property
    def M(self):
        return len(self.ratios)

    @property
    def canonical(self):
        # sorted so that permuted inputs take bitwise-identical code paths
        return tuple(sorted(self.ratios))

    def upper_bound(self):
        """A bound on the right edge: the all-square value ``(M+1)^(M+1)/M^M``."""
        M = self.M
        return (M + 1) ** (M + 1) / M ** M


@dataclass(frozen=True)
class StieltjesValue:
    z: complex
    G: complex
    residual: float


def resolvent_residual(params, z, G):
    """Left-hand side ``1 - zG + G prod_l (1 - y_l + z y_l G)``."""
    prod = 1.0 + 0j
    for y in params.canonical:
        prod *= 1.0 - y + z * y * G
    return 1.0 - z * G + G * prod


def resolvent_polynomial(params, z):
    """Coefficients in ``G``, highest degree first (degree ``M + 1``)."""
    poly = np.array([1.0 + 0j])  # ascending powers of G
    for y in params.canonical:
        poly = np.convolve(poly, np.array([1.0 - y, z * y], dtype=complex))
    full = np.zeros(params.M + 2, dtype=complex)
    full[1:] += poly
    full[0] += 1.0
    full[1] -= z
    return full[::-1]


def _roots(params, z):
    coeffs = resolvent_polynomial(params, z)
    roots = np.roots(coeffs)
    dcoeffs = np.polyder(coeffs)
    for _ in range(2):
        d = np.polyval(dcoeffs, roots)
        ok = d != 0
        roots = np.where(ok, roots - np.polyval(coeffs, roots) / np.where(ok, d, 1.0), roots)
    return roots


def _pick(roots, target):
    dist = np.abs(roots - target)
    order = np.argsort(dist)
    near = dist[order[0]]
    gap = dist[order[1]] if roots.size > 1 else np.inf
    return roots[order[0]], near, gap


def _track(params, z_from, g_from, z_to, min_step=1e-12):
    tau, step = 0.0, 0.05
    g_prev, g_cur, last_h = None, g_from, 1.0
    while tau < 1.0:
        h = min(step, 1.0 - tau)
        z_new = z_from + (tau + h) * (z_to - z_from)
        pred = g_cur if g_prev is None else g_cur + (g_cur - g_prev) * (h / last_h)
        roots = _roots(params, z_new)
        cand, near, gap = _pick(roots, pred)
        sep = np.min(np.abs(np.delete(roots, np.argmin(np.abs(roots - cand))) - cand)) if roots.size > 1 else np.inf
        if near < 0.25 * sep and near <= 0.1 * (abs(cand) + abs(g_cur)) + 1e-300 and near < 0.5 * gap:
            g_prev, g_cur, last_h = g_cur, cand, h
            tau += h
            step = min(2.0 * h, 0.25)
        else:
            step = 0.5 * h
            if step < min_step:
                raise BranchTrackingError(f"continuation stalled near z={z_new!r}")
    return g_cur


def solve_G(params, z, start=None):
    """Physical resolvent value at ``z`` with ``Im z != 0``.

    Parameters
    ----------
    params : GeneralParams
    z : complex
    start : tuple of (complex, complex), optional
        A known physical pair ``(z1, G(z1))`` in the same half-plane to
        continue from instead of the far base point.

    Raises
    ------
    BranchTrackingError
        If continuation cannot separate the physical root from the others.
    """
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("solve_G needs Im z != 0")
    sgn = 1.0 if z.imag > 0 else -1.0
    if start is None:
        z0 = 1j * sgn * 10.0 * (1.0 + params.upper_bound())
        g0, _, _ = _pick(_roots(params, z0), 1.0 / z0)
        if abs(z) >= abs(z0):
            g, _, _ = _pick(_roots(params, z), 1.0 / z)
            return _value(params, z, g)
    else:
        z0, g0 = complex(start[0]), complex(start[1])
        if z0.imag * z.imag <= 0:
            raise DomainError("start point must lie in the same half-plane as z")
    g = _track(params, z0, g0, z)
    return _value(params, z, g)


def _value(params, z, g):
    return StieltjesValue(z, complex(g), float(abs(resolvent_residual(params, z, g))))


def density_from_inversion(params, x, steps=INVERSION_STEPS):
    """Density ``-Im G(x + i eps) / pi`` extrapolated to ``eps -> 0``.

    Two rounds of Richardson extrapolation over the three step sizes remove
    the first- and second-order terms. Negative results are clamped to 0.
    """
    return density_with_residual(params, x, steps)[0]


def density_with_residual(params, x, steps=INVERSION_STEPS):
    """``density_from_inversion`` plus the largest residual of the three solves."""
    x = float(x)
    if x <= 0.0:
        raise DomainError(f"x must be positive, got {x!r}")
    h1, h2, h3 = steps
    v1 = solve_G(params, complex(x, h1))
    v2 = solve_G(params, complex(x, h2), start=(v1.z, v1.G))
    v3 = solve_G(params, complex(x, h3), start=(v2.z, v2.G))
    f1, f2, f3 = (-v.G.imag / math.pi for v in (v1, v2, v3))
    r1 = 2.0 * f2 - f1
    r2 = 2.0 * f3 - f2
    res = max(v1.residual, v2.residual, v3.residual)
    return max((4.0 * r2 - r1) / 3.0, 0.0), res


def moments_series(params, K):
    """Moments ``m_0..m_K`` from the expansion ``G = sum m_k z^(-k-1)``.

    With ``m(w) = zG`` and ``w = 1/z`` the equation reads
    ``m = 1 + w m prod_l (1 - y_l + y_l m)``; each fixed-point sweep fixes one
    more coefficient.
    """
    if int(K) != K or not 0 <= K <= 12:
        raise DomainError(f"K must be an integer in [0, 12], got {K!r}")
    K = int(K)
    P = np.polynomial.polynomial
    m = np.zeros(K + 1)
    m[0] = 1.0
    for _ in range(K + 1):
        prod = np.array([1.0])
        for y in params.canonical:
            prod = P.polymul(prod, np.concatenate([[1.0 - y + y * m[0]], y * m[1:]]))[:K + 1]
        rhs = np.zeros(K + 1)
        rhs[0] = 1.0
        shifted = P.polymul(m, prod)[:K]
        rhs[1:1 + shifted.size] += shifted
        m = rhs
    return [float(v) for v in m]


def inversion_grid(params, xs, steps=INVERSION_STEPS):
    """``density_from_inversion`` on an increasing grid of positive points.

    Each step size is swept left to right, continuing the root from the
    previous grid point; a point where that fails restarts from the far base
    point.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or np.any(xs <= 0.0) or np.any(np.diff(xs) <= 0.0):
        raise DomainError("xs must be a strictly increasing array of positive reals")
    levels = []
    for h in steps:
        out = np.empty(xs.size)
        prev = None
        for i, x in enumerate(xs):
            z = complex(x, h)
            try:
                v = solve_G(params, z, start=prev)
            except BranchTrackingError:
                v = solve_G(params, z)
            prev = (v.z, v.G)
            out[i] = -v.G.imag / math.pi
        levels.append(out)
    f1, f2, f3 = levels
    r1 = 2.0 * f2 - f1
    r2 = 2.0 * f3 - f2
    return np.maximum((4.0 * r2 - r1) / 3.0, 0.0)


def _refine_edge(params, inside, outside, threshold, iters=30):
    for _ in range(iters):
        mid = 0.5 * (inside + outside)
        if density_from_inversion(params, mid) > threshold:
            inside = mid
        else:
            outside = mid
    return outside


def detect_support(params, n=400, threshold=1e-6):
    """Intervals where the inverted density exceeds ``threshold``.

    A uniform scan over ``(0, 1.05 * upper_bound]`` locates the intervals and
    bisection sharpens each end to the threshold crossing. An interval that
    already covers the first scan point is followed toward the origin, and
    reported to start at 0 only if the density is still above threshold at
    ``1e-9 * upper_bound``.
    """
    top = 1.05 * params.upper_bound()
    xs = np.linspace(top / n, top, n)
    on = inversion_grid(params, xs) > threshold
    out = []
    i = 0
    while i < n:
        if not on[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and on[j + 1]:
            j += 1
        if i > 0:
            lo = _refine_edge(params, xs[i], xs[i - 1], threshold)
        elif density_from_inversion(params, 1e-9 * top) > threshold:
            lo = 0.0    # hard edge at the origin
        else:
            lo = _refine_edge(params, xs[0], 1e-9 * top, threshold, iters=50)
        hi = top if j + 1 == n else _refine_edge(params, xs[j], xs[j + 1], threshold)
        out.append((float(lo), float(hi)))
        i = j + 1
    return out


def inversion_moments(params, K, support=None, panels=96, order=10):
    """Moments ``0..K`` of the inverted density.

    Composite Gauss-Legendre in ``x = lo + (hi - lo)(1 - cos phi)/2`` on each
    detected interval, which absorbs square-root behavior at both ends.
    """
    if support is None:
        support = detect_support(params)
    g, w = np.polynomial.legendre.leggauss(order)
    moments = np.zeros(K + 1)
    for lo, hi in support:
        knots = np.linspace(0.0, math.pi, panels + 1)
        mid = 0.5 * (knots[1:] + knots[:-1])[:, None]
        half = 0.5 * (knots[1:] - knots[:-1])[:, None]
        phi = (mid + half * g).ravel()
        wphi = (half * w).ravel()
        x = lo + (hi - lo) * 0.5 * (1.0 - np.cos(phi))
        jac = (hi - lo) * 0.5 * np.sin(phi)
        keep = x > 0.0
        vals = np.zeros(x.size)
        vals[keep] = inversion_grid(params, x[keep])
        for k in range(K + 1):
            moments[k] += np.sum(wphi * jac * vals * x ** k)
    return [float(m) for m in moments]
