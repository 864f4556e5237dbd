"""Finite-N correlation kernel of the log squared singular values.

For dimensions ``N_0 = N`` and ``N_j = N + nu_j`` the kernel of the points
``log(lambda_i)`` is

    K(x, y) = int_{c + iR} ds/(2 pi i) e^{-ys} prod_{j=0}^M Gamma(s + N_j)
              / Gamma(s) * S_x(s),

    S_x(s) = sum_{k=0}^{N-1} (-1)^k e^{-kx} / (k! prod_j Gamma(N_j - k) (s + k)),

where ``S_x`` is the exact residue sum of the inner contour integral.
``S_x / Gamma(s)`` is entire, so any abscissa ``c > -N`` is admissible; ``c``
is placed near the real part of the saddle point, which keeps the
oscillating line integral free of cancellation. The alternating residue sum
still cancels heavily for large N (about 23 digits at N = 50) and is
accumulated in double-double or MPFR arithmetic when double precision
cannot meet the tolerance. Conjugate symmetry of the integrand reduces the line
integral to ``(1/pi) Re int_0^inf``.
"""

from dataclasses import dataclass, field
import functools
import math
import warnings

import gmpy2
import numpy as np
from scipy.special import gammaln

from . import _ddouble as dd
from .density import ModelParams, radial, x_of_theta, rho_of_theta
from .errors import ContourConfigError, DomainError, PrecisionLossError
from .specfun import log_gamma, sinc_pi

__all__ = [
    "FiniteModel", "ContourConfig", "KernelEvaluation", "ScaledWindow",
    "delta_MN", "kernel_log", "kernel_matrix", "laguerre_oracle", "correlation",
    "scaled_points", "sine_limit_check", "corollary_density_check", "total_mass",
    "choose_abscissa",
]

_EPS = np.finfo(float).eps
_DD_EPS = 2.0 ** -104
_PRECISIONS = ("auto", "double", "double-double", "multiprecision")


@dataclass(frozen=True)
class FiniteModel:
    """Smallest dimension ``N`` and the offsets ``nu_1..nu_M``."""

    N: int
    nu: tuple

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        nu = tuple(self.nu)
        if not nu:
            raise DomainError("nu must list at least one factor")
        for v in nu:
            if int(v) != v or v < 0:
                raise DomainError(f"every nu_j must be a nonnegative integer, got {v!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "nu", tuple(int(v) for v in nu))

    @property
    def M(self):
        return len(self.nu)

    @property
    def dims(self):
        """``(N_0, N_1, ..., N_M)``."""
        return (self.N,) + tuple(self.N + v for v in self.nu)


@dataclass(frozen=True)
class ContourConfig:
    """Quadrature settings for the vertical s-line.

    ``c``, ``T`` and ``panels`` default to automatic choices. ``tol`` is the
    target for ``|error| <= tol * (1 + |K|)``. ``precision`` selects the
    accumulation of the residue sum: ``double``, ``double-double``,
    ``multiprecision`` (``bits`` of MPFR precision, estimated when omitted) or
    ``auto``, which picks the cheapest of these that meets ``tol``.
    """

    c: float = None
    T: float = None
    panels: int = None
    tol: float = 1e-10
    precision: str = "auto"
    bits: int = None
    order: int = 16
    max_panels: int = 8192

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ContourConfigError(f"tol must lie in (0, 1), got {self.tol!r}")
        if self.T is not None and not self.T > 0.0:
            raise ContourConfigError(f"T must be positive, got {self.T!r}")
        if self.panels is not None and (int(self.panels) != self.panels or self.panels < 1):
            raise ContourConfigError(f"panels must be a positive integer, got {self.panels!r}")
        if self.precision not in _PRECISIONS:
            raise ContourConfigError(f"precision must be one of {_PRECISIONS}, got {self.precision!r}")
        if self.bits is not None and (int(self.bits) != self.bits or self.bits < 64):
            raise ContourConfigError(f"bits must be an integer >= 64, got {self.bits!r}")
        if self.order < 2:
            raise ContourConfigError("order must be at least 2")
        if self.c is not None and not math.isfinite(self.c):
            raise ContourConfigError("c must be finite")


@dataclass(frozen=True)
class KernelEvaluation:
    x: float
    y: float
    value: float
    abs_error_estimate: float
    c: float = 0.0
    T: float = 0.0
    panels: int = 0
    precision: str = "double"


@dataclass(frozen=True)
class ScaledWindow:
    theta: float
    xi: tuple
    scale: float
    center: float
    points: tuple = field(default=())


def delta_MN(model):
    """Depth-to-width parameter ``sum_{j=0}^M 1/N_j``."""
    return math.fsum(1.0 / n for n in model.dims)


def _check_c(model, c):
    if not c > -model.N:
        raise ContourConfigError(f"c={c!r} must exceed -N={-model.N}")
    if c <= 0.0 and c == round(c):
        raise ContourConfigError(f"c={c!r} sits on a pole of the residue sum")


def choose_abscissa(model, x):
    """Abscissa near the real part of the saddle point at ``x``.

    The saddle solves ``prod_j (s + N_j) = e^x s``. A complex pair (bulk)
    gives ``Re s``; otherwise the largest real root is used. The result is
    moved to the nearest half-integer and clamped to ``c >= -N + 1/2`` so
    ``c + k`` is exact and stays away from the points ``s = -k``.
    """
    poly = np.array([1.0])
    for n in model.dims:
        poly = np.convolve(poly, [1.0, float(n)])
    poly[-2] -= math.exp(min(x, 700.0))
    roots = np.roots(poly)
    cplx = roots[roots.imag > 1e-9 * (1.0 + np.abs(roots))]
    if cplx.size:
        ref = float(np.mean(model.dims[1:]))
        pick = cplx[np.argmin(np.angle(cplx + ref))]
        target = pick.real
    else:
        target = float(np.max(roots.real))
    c = math.floor(target) + 0.5
    return max(c, -model.N + 0.5)


@functools.lru_cache(maxsize=64)
def _log_weights(dims, bits):
    # log(k! prod_j Gamma(N_j - k)) for k < N; independent of x
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        return tuple(gmpy2.lgamma(k + 1)[0] + sum(gmpy2.lgamma(n - k)[0] for n in dims)
                     for k in range(dims[0]))


class _ResidueSum:
    """Coefficients ``b_k = e^{-L} (-1)^k e^{-kx} / (k! prod_j Gamma(N_j - k))`` of ``S_x``.

    ``L`` is the largest ``log |b_k|`` so the scaled values stay in range.
    """

    def __init__(self, model, x):
        self.model = model
        self.x = float(x)
        self._cache = {}
        hi_lo = self.coefficients(160)
        self.log_scale = self._log_scale
        self.hi = np.array([float(v) for v in hi_lo])
        self.lo = np.array([float(v - h) for v, h in zip(hi_lo, self.hi)])

    def coefficients(self, bits):
        if bits in self._cache:
            return self._cache[bits]
        weights = _log_weights(self.model.dims, bits + 64)
        with gmpy2.context(gmpy2.get_context(), precision=bits + 64):
            x = gmpy2.mpfr(self.x)
            logs = [-k * x - w for k, w in enumerate(weights)]
            L = max(logs)
            vals = [gmpy2.exp(lg - L) * (1 if k % 2 == 0 else -1) for k, lg in enumerate(logs)]
        with gmpy2.context(gmpy2.get_context(), precision=bits):
            vals = [+v for v in vals]
        self._log_scale = float(L)
        self._cache[bits] = vals
        return vals

    def bound(self, c, t):
        k = np.arange(self.hi.size, dtype=float)
        a = (c + k)[None, :]
        tt = t[:, None]
        return (np.abs(self.hi)[None, :] / np.sqrt(a * a + tt * tt)).sum(axis=1)

    def evaluate(self, c, t, mode, bits=0):
        """``e^{-L} S_x(c + it)`` at each ``t`` plus an absolute error bound."""
        t = np.asarray(t, dtype=float)
        bound = self.bound(c, t)
        n = self.hi.size
        if mode == "double":
            k = np.arange(n, dtype=float)
            a = (c + k)[None, :]
            tt = t[:, None]
            den = a * a + tt * tt
            re = (self.hi[None, :] * a / den).sum(axis=1)
            im = (-self.hi[None, :] * tt / den).sum(axis=1)
            return re + 1j * im, 4.0 * n * _EPS * bound
        if mode == "double-double":
            return self._evaluate_dd(c, t, bound)
        return self._evaluate_mp(c, t, bits, bound)

    def _evaluate_dd(self, c, t, bound):
        n = self.hi.size
        a = (c + np.arange(n, dtype=float))[None, :]
        tt = t[:, None]
        shape = (t.size, n)
        bh = np.broadcast_to(self.hi[None, :], shape)
        bl = np.broadcast_to(self.lo[None, :], shape)
        aa = np.broadcast_to(a, shape)
        tb = np.broadcast_to(tt, shape)
        den = dd.add(dd.two_prod(aa, aa), dd.two_prod(tb, tb))
        b_over = dd.mul((bh, bl), dd.div(dd.from_double(np.ones(shape)), den))
        re = dd.sum_axis(dd.mul_d(b_over, aa), axis=1)
        im = dd.sum_axis(dd.mul_d(b_over, -tb), axis=1)
        val = (re[0] + re[1]) + 1j * (im[0] + im[1])
        return val, 16.0 * n * _DD_EPS * bound + _EPS * np.abs(val)

    def _evaluate_mp(self, c, t, bits, bound):
        coeffs = self.coefficients(bits)
        out = np.empty(t.size, dtype=complex)
        with gmpy2.context(gmpy2.get_context(), precision=bits):
            a = [gmpy2.mpfr(c + k) for k in range(len(coeffs))]
            a2 = [v * v for v in a]
            for i, tv in enumerate(t):
                tm = gmpy2.mpfr(float(tv))
                t2 = tm * tm
                re = gmpy2.mpfr(0)
                im = gmpy2.mpfr(0)
                for bk, ak, ak2 in zip(coeffs, a, a2):
                    q = bk / (ak2 + t2)
                    re += q * ak
                    im += q
                out[i] = complex(float(re), -float(im * tm))
        n = len(coeffs)
        return out, 8.0 * n * 2.0 ** -bits * bound + _EPS * np.abs(out)


def _log_gamma_part(model, s):
    out = -log_gamma(s)
    for n in model.dims:
        out = out + log_gamma(s + n)
    return out


def _log_bound(model, rsum, c, t, y):
    # log of |e^{-ys} F(s)| * sum_k |b_k| / |s + k|, no cancellation assumed
    s = c + 1j * t
    lf = (_log_gamma_part(model, s) - y * s).real
    k = np.arange(rsum.hi.size)
    mag = np.abs(rsum.hi)[None, :] / np.abs(s[:, None] + k[None, :])
    with np.errstate(divide="ignore"):
        return lf + rsum.log_scale + np.log(mag.sum(axis=1))


def _auto_T(model, rsums, c, ys, tol):
    # first height past the peak where every integrand bound sits far below it
    t_max = 64.0
    while t_max < 1e6:
        t = np.arange(1.0, t_max, 1.0)
        need = 0.0
        for rs in rsums:
            for y in ys:
                b = _log_bound(model, rs, c, t, y)
                ip = int(np.argmax(b))
                below = np.flatnonzero(b[ip:] < b[ip] + math.log(tol) - 12.0)
                if below.size == 0:
                    break
                need = max(need, float(t[ip + below[0]]))
            else:
                continue
            break
        else:
            return need
        t_max *= 2.0
    raise ContourConfigError("integrand does not decay; cannot place the truncation")


def _gl_nodes(T, panels, order):
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, T, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return (mid + half * g).ravel(), (half * w).ravel()


def _line_integrals(model, rsums, ys, c, T, panels, cfg, mode, bits):
    """``(1/pi) Re int_0^T`` for every pair ``(rsums[i], ys[j])``."""
    t, w = _gl_nodes(T, panels, cfg.order)
    s = c + 1j * t
    lf = _log_gamma_part(model, s)
    vals = np.zeros((len(rsums), len(ys)))
    errs = np.zeros_like(vals)
    for i, rs in enumerate(rsums):
        S, serr = rs.evaluate(c, t, mode, bits)
        with np.errstate(divide="ignore"):
            logS = np.log(S)
        for j, y in enumerate(ys):
            logf = lf - y * s + logS
            ref = np.max(logf.real[np.isfinite(logf.real)])
            f = np.exp(logf - ref)
            scale = math.exp(ref + rs.log_scale) / math.pi
            absf = np.abs(f)
            vals[i, j] = scale * np.sum(w * f).real
            round_err = 4.0 * _EPS * scale * np.sum(w * absf)
            # relative error of S carried through |e^{-ys} F(s)|
            with np.errstate(divide="ignore", invalid="ignore"):
                rel_s = np.where(np.abs(S) > 0, serr / np.abs(S), 0.0)
            errs[i, j] = round_err + scale * np.sum(w * absf * rel_s)
    return vals, errs


def _tail_estimate(model, rsums, ys, c, T):
    decay = model.M * math.pi / 2.0
    worst = 0.0
    for rs in rsums:
        for y in ys:
            b = _log_bound(model, rs, c, np.array([T]), y)[0]
            worst = max(worst, math.exp(min(b, 700.0)) / (math.pi * decay))
    return worst


def _probe_loss(rsums, c, T):
    # worst ratio of sum |b_k/(s+k)| to |S| over a few heights, from a precise evaluation
    probe = np.linspace(0.0, T, 17)[1:]
    loss = 1.0
    for rs in rsums:
        bits = 256
        while True:
            S, err = rs.evaluate(c, probe, "multiprecision", bits)
            if np.all(err <= 1e-6 * np.abs(S)) or bits > 8192:
                break
            bits *= 2
        with np.errstate(divide="ignore"):
            loss = max(loss, float(np.max(rs.bound(c, probe) / np.abs(S))))
    return loss


def _bits_for(loss, n, tol):
    return 32 * int(math.ceil((math.log2(8.0 * n * loss / tol) + 24.0) / 32.0))


def _select_mode(cfg, rsums, c, T, n):
    if cfg.precision in ("double", "double-double"):
        unit = 4.0 * _EPS if cfg.precision == "double" else 16.0 * _DD_EPS
        loss = _probe_loss(rsums, c, T)
        if unit * n * loss > cfg.tol:
            raise PrecisionLossError(
                f"the residue sum cancels by a factor {loss:.3g}, beyond {cfg.precision} "
                f"accuracy at tol={cfg.tol}; use precision='multiprecision' or 'auto'")
        return cfg.precision, 0
    if cfg.precision == "multiprecision" and cfg.bits is not None:
        return "multiprecision", int(cfg.bits)
    loss = _probe_loss(rsums, c, T)
    need = 1e-2 * cfg.tol
    if cfg.precision == "auto":
        if 4.0 * n * _EPS * loss <= need:
            return "double", 0
        if 16.0 * n * _DD_EPS * loss <= need:
            return "double-double", 0
    return "multiprecision", _bits_for(loss, n, need)


def _evaluate(model, xs, ys, cfg, c=None):
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if c is None:
        c = cfg.c if cfg.c is not None else choose_abscissa(model, float(np.mean(xs + ys)))
    _check_c(model, c)
    rsums = [_ResidueSum(model, x) for x in xs]
    if cfg.T is not None:
        T = cfg.T
    else:
        T = _auto_T(model, rsums, c, ys, cfg.tol)
        while _tail_estimate(model, rsums, ys, c, T) > 0.01 * cfg.tol:
            T *= 1.25
    mode, bits = _select_mode(cfg, rsums, c, T, model.N)
    for attempt in range(4):
        panels = cfg.panels if cfg.panels is not None else max(4, int(math.ceil(T / 4.0)))
        prev, _ = _line_integrals(model, rsums, ys, c, T, panels, cfg, mode, bits)
        while True:
            panels *= 2
            if panels > cfg.max_panels:
                raise ContourConfigError(
                    f"quadrature did not reach tol={cfg.tol} within {cfg.max_panels} panels")
            cur, rerr = _line_integrals(model, rsums, ys, c, T, panels, cfg, mode, bits)
            change = np.abs(cur - prev)
            if np.all(change <= cfg.tol * (1.0 + np.abs(cur))):
                break
            prev = cur
        limit = cfg.tol * (1.0 + np.abs(cur))
        if np.all(rerr <= limit):
            break
        if cfg.precision != "auto":
            hint = "" if mode == "multiprecision" else "; use precision='multiprecision' or 'auto'"
            raise PrecisionLossError(
                f"cancellation error {float(np.max(rerr)):.3g} exceeds tolerance{hint}")
        # escalate: the probe underestimated the loss
        bits = max(bits, 128) + 64 if mode == "multiprecision" else 256
        mode = "multiprecision"
    else:
        raise PrecisionLossError(f"cancellation error {float(np.max(rerr)):.3g} persists at {bits} bits")
    tail = _tail_estimate(model, rsums, ys, c, T)
    if tail > 0.1 * np.min(limit):
        raise ContourConfigError(f"truncation at T={T} leaves a tail of about {tail:.3g}")
    err = change + rerr + tail
    return cur, err, c, T, panels, mode


def kernel_log(model, x, y, cfg=None):
    """Kernel ``K(x, y)`` of the log squared singular values.

    Raises
    ------
    ContourConfigError
        If the truncation or panel refinement cannot meet ``cfg.tol``.
    PrecisionLossError
        If cancellation in the residue sum exceeds ``cfg.tol`` at the
        requested precision.
    """
    cfg = cfg or ContourConfig()
    vals, errs, c, T, panels, prec = _evaluate(model, [x], [y], cfg)
    return KernelEvaluation(float(x), float(y), float(vals[0, 0]), float(errs[0, 0]),
                            c, T, panels, prec)


def kernel_matrix(model, points, cfg=None):
    """Matrix ``K(points[i], points[j])`` on shared quadrature nodes.

    Returns the values and the elementwise error estimates.
    """
    cfg = cfg or ContourConfig()
    pts = [float(p) for p in points]
    vals, errs, *_ = _evaluate(model, pts, pts, cfg)
    return vals, errs


def laguerre_oracle(model, x, y):
    """Single-factor kernel from orthonormal Laguerre functions.

    Uses the three-term recurrence of
    ``phi_n(l) = sqrt(n!/Gamma(n+nu+1)) l^{nu/2} e^{-l/2} L_n^nu(l)`` and the
    change of variables ``l = e^x``, giving
    ``sqrt(e^x e^y) sum_{n<N} phi_n(e^x) phi_n(e^y)``.
    """
    if model.M != 1:
        raise DomainError("the Laguerre oracle needs exactly one factor")
    nu = model.nu[0]
    lam = np.array([math.exp(x), math.exp(y)])
    log_phi0 = 0.5 * nu * np.log(lam) - 0.5 * lam - 0.5 * gammaln(nu + 1.0)
    p_prev = np.zeros(2)
    p_cur = np.exp(log_phi0)
    total = p_cur[0] * p_cur[1]
    for n in range(model.N - 1):
        nxt = ((2 * n + nu + 1 - lam) * p_cur - math.sqrt(n * (n + nu)) * p_prev) / math.sqrt(
            (n + 1) * (n + nu + 1))
        p_prev, p_cur = p_cur, nxt
        total += p_cur[0] * p_cur[1]
    return float(math.exp(0.5 * (x + y)) * total)


def correlation(model, points, cfg=None):
    """n-point correlation ``det[K(x_i, x_j)]`` for up to 8 distinct points."""
    pts = [float(p) for p in points]
    if not 1 <= len(pts) <= 8:
        raise DomainError("correlation supports 1 to 8 points")
    if len(set(pts)) != len(pts):
        raise DomainError("points must be distinct")
    vals, _ = kernel_matrix(model, pts, cfg)
    return float(np.linalg.det(vals))


def _model_params_for(model, params):
    if params.M != model.M:
        raise DomainError(f"params has M={params.M} but the finite model has M={model.M}")


def scaled_points(model, params, theta, xi):
    """Bulk window at angle ``theta`` and its physical coordinates.

    ``center = sum_{j>=1} log N_j + log x(theta)`` and
    ``scale = N |r(theta) sin theta| / pi``; point ``i`` is
    ``center + xi_i / scale``.
    """
    _model_params_for(model, params)
    r = radial(params, theta)
    x = x_of_theta(params, theta)
    if x <= 0.0:
        raise DomainError(f"x(theta) = {x!r} is not positive")
    center = math.fsum(math.log(n) for n in model.dims[1:]) + math.log(x)
    scale = model.N * abs(r * math.sin(theta)) / math.pi
    xi = tuple(float(v) for v in xi)
    return ScaledWindow(float(theta), xi, scale, center, tuple(center + v / scale for v in xi))


def sine_limit_check(model, params, theta, xi_grid=(0.0, 0.5), cfg=None):
    """Compare the bulk-scaled kernel with the sine kernel.

    Returns a dict with the gauge-free 2x2 determinant deviations for every
    pair of grid points, the full-grid determinant, the diagonal deviation,
    and the gauged pointwise deviation (diagnostic only).
    """
    win = scaled_points(model, params, theta, xi_grid)
    vals, errs = kernel_matrix(model, win.points, cfg)
    kt = vals / win.scale
    xi = np.array(win.xi)
    diff = xi[:, None] - xi[None, :]
    sine = sinc_pi(diff)
    r = radial(params, theta)
    slope = 1.0 / math.tan(theta) - 1.0 / (params.y * r * math.sin(theta))
    gauge = np.exp(-math.pi * diff * slope)
    pairs = []
    n = len(xi)
    for i in range(n):
        for j in range(i + 1, n):
            det = kt[i, i] * kt[j, j] - kt[i, j] * kt[j, i]
            target = 1.0 - sinc_pi(xi[i] - xi[j]) ** 2
            pairs.append({"xi": float(xi[i]), "eta": float(xi[j]), "det": float(det),
                          "target": float(target), "deviation": float(abs(det - target))})
    return {
        "theta": win.theta, "N": model.N, "nu": list(model.nu), "scale": win.scale,
        "center": win.center, "points": list(win.points),
        "diagonal_deviation": float(np.max(np.abs(np.diag(kt) - 1.0))),
        "pair_determinants": pairs,
        "det_full": float(np.linalg.det(kt)), "det_sine": float(np.linalg.det(sine)),
        "gauged_sup_deviation": float(np.max(np.abs(gauge * kt - sine))),
        "max_abs_error_estimate": float(np.max(errs) / win.scale),
    }


def corollary_density_check(model, params, theta, cfg=None):
    """Relative gap between ``K(center, center) / (N x(theta))`` and ``rho(theta)``."""
    win = scaled_points(model, params, theta, (0.0,))
    k = kernel_log(model, win.center, win.center, cfg)
    x = x_of_theta(params, theta)
    rho = rho_of_theta(params, theta)
    est = k.value / (model.N * x)
    return {"theta": float(theta), "N": model.N, "nu": list(model.nu), "center": win.center,
            "kernel": k.value, "estimate": est, "rho": rho,
            "relative_deviation": abs(est - rho) / rho}


def _bulk_range(model):
    # log-coordinate range of the spectrum under the equal-ratio approximation
    y = model.N / max(model.dims[1:])
    from .density import support_edges
    sup = support_edges(ModelParams(model.M, y))
    base = math.fsum(math.log(n) for n in model.dims[1:])
    lo = base + math.log(max(sup.x_minus, 1e-3 * sup.x_plus))
    hi = base + math.log(sup.x_plus)
    return lo, hi


def total_mass(model, cfg=None, rel_tol=1e-5):
    """Integral of the diagonal ``K(x, x)`` over the real line.

    The window starts at the bulk range padded by its width and is widened
    on whichever side carries boundary density above ``rel_tol * N``.
    Returns ``(mass, window)``.
    """
    cfg = cfg or ContourConfig(tol=1e-9)
    lo, hi = _bulk_range(model)
    width = hi - lo
    lo -= 2.0 * width + 4.0
    hi += width + 1.0

    def diag(x):
        return kernel_log(model, x, x, cfg).value

    for _ in range(40):
        left, right = diag(lo), diag(hi)
        # left tail decays at least like e^{x}; right tail doubly exponentially
        grow = False
        if left > rel_tol * model.N:
            lo -= width + 2.0
            grow = True
        if right > rel_tol * model.N:
            hi += 0.5 * width + 1.0
            grow = True
        if not grow:
            break
    g, w = np.polynomial.legendre.leggauss(12)
    panels = max(8, int(math.ceil(0.5 * (hi - lo))))
    prev = None
    while True:
        edges = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        xs = (mid + half * g).ravel()
        ws = (half * w).ravel()
        mass = float(np.sum(ws * np.array([diag(x) for x in xs])))
        if prev is not None and abs(mass - prev) <= 0.1 * rel_tol * model.N:
            return mass, (lo, hi)
        prev = mass
        panels *= 2
        if panels > 4096:
            warnings.warn("total mass quadrature did not settle", RuntimeWarning, stacklevel=2)
            return mass, (lo, hi)
