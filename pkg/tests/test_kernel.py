import math

import mpmath
import numpy as np
import pytest

from ginprod import density as d
from ginprod import kernel as k
from ginprod.errors import ContourConfigError, DomainError, PrecisionLossError
from ginprod.specfun import sinc_pi

CFG = k.ContourConfig()


def F(N, *nu):
    return k.FiniteModel(N, tuple(nu))


def gamma_product_log_density(dims, x):
    # N = 1: Y*Y is a product of independent Gamma(N_j) variables; the density
    # of lam is a Meijer G-function, and x = log lam adds the factor lam
    lam = mpmath.e ** x
    g = mpmath.meijerg([[], []], [[n - 1 for n in dims], []], lam)
    norm = mpmath.fprod(mpmath.gamma(n) for n in dims)
    return float(lam * g / norm)


def test_model_validation():
    for N, nu in [(0, (0,)), (2, ()), (2, (-1,)), (1.5, (0,))]:
        with pytest.raises(DomainError):
            F(N, *nu)
    assert F(3, 0, 2).dims == (3, 3, 5)


@pytest.mark.parametrize("kw", [
    {"tol": 0.0}, {"tol": 1.0}, {"T": -1.0}, {"panels": 0}, {"precision": "quad"},
    {"bits": 32}, {"c": float("nan")},
])
def test_contour_config_validation(kw):
    with pytest.raises(ContourConfigError):
        k.ContourConfig(**kw)


@pytest.mark.parametrize("model, expected", [
    (F(100, 100), 0.015),
    (F(1, 0), 2.0),
    (F(50, 0, 0), 0.06),
])
def test_delta_MN(model, expected):
    assert abs(k.delta_MN(model) - expected) <= 1e-15


def test_kernel_single_point_examples():
    assert abs(k.kernel_log(F(1, 0), 0.0, 0.0).value - math.exp(-1)) <= 1e-10
    assert abs(k.kernel_log(F(1, 0), 1.7, -1.0).value - math.exp(-1 - math.exp(-1))) <= 1e-10


def test_kernel_closed_form_random():
    rng = np.random.default_rng(11)
    for x, y in rng.uniform(-4, 2.5, size=(20, 2)):
        ev = k.kernel_log(F(1, 0), x, y)
        assert abs(ev.value - math.exp(y - math.exp(y))) <= 1e-10
        assert ev.abs_error_estimate <= CFG.tol * (1 + abs(ev.value))


@pytest.mark.parametrize("nu", [(0, 0), (1, 3), (0, 2, 1)])
def test_kernel_meijer_g_oracle(nu):
    model = F(1, *nu)
    for x in (-2.0, 0.0, 1.5, 3.0):
        ref = gamma_product_log_density(model.dims[1:], x)
        assert abs(k.kernel_log(model, x, x).value - ref) <= 1e-9 * max(1.0, ref)


def test_kernel_two_factor_bessel_closed_form():
    # the product of two unit exponentials has density 2 K_0(2 sqrt(lam))
    model = F(1, 0, 0)
    for x in (-1.0, 0.5, 2.0):
        ref = math.exp(x) * 2 * float(mpmath.besselk(0, 2 * math.exp(x / 2)))
        assert abs(k.kernel_log(model, x, x).value - ref) <= 1e-10


def test_laguerre_oracle_closed_form():
    assert abs(k.laguerre_oracle(F(1, 0), 0.0, 0.0) - math.exp(-1)) <= 1e-15
    with pytest.raises(DomainError):
        k.laguerre_oracle(F(2, 0, 0), 0.0, 0.0)


def test_laguerre_oracle_integrates_to_N():
    val = mpmath.quad(lambda x: k.laguerre_oracle(F(5, 0), float(x), float(x)), [-40, -5, 0, 2, 4])
    assert abs(val - 5) <= 1e-6


def test_laguerre_oracle_against_mpmath_laguerre():
    N, nu = 6, 2
    mpmath.mp.dps = 30
    try:
        for x, y in [(0.3, 1.1), (1.5, 1.5), (-0.5, 2.0)]:
            lx, ly = mpmath.e ** x, mpmath.e ** y
            tot = mpmath.mpf(0)
            for n in range(N):
                h = mpmath.gamma(n + nu + 1) / mpmath.factorial(n)
                tot += mpmath.laguerre(n, nu, lx) * mpmath.laguerre(n, nu, ly) / h
            ref = float(tot * (lx * ly) ** (nu / 2.0) * mpmath.e ** (-(lx + ly) / 2) * mpmath.sqrt(lx * ly))
            assert abs(k.laguerre_oracle(F(N, nu), x, y) - ref) <= 1e-12 * abs(ref)
    finally:
        mpmath.mp.dps = 15


def bulk_points(model, n=5):
    p = d.ModelParams(1, model.N / model.dims[1])
    sup = d.support_edges(p)
    return [math.log(model.dims[1]) + math.log(v)
            for v in sup.x_minus + sup.width * np.linspace(0.15, 0.85, n)]


@pytest.mark.parametrize("N, nu", [(10, 0), (20, 3), (30, 5)])
def test_kernel_matches_laguerre(N, nu):
    model = F(N, nu)
    for x in bulk_points(model):
        ref = k.laguerre_oracle(model, x, x)
        assert abs(k.kernel_log(model, x, x).value - ref) <= 1e-6 * ref


def test_kernel_off_diagonal_matches_laguerre_up_to_gauge():
    # off-diagonal values depend on the gauge; 2x2 determinants do not
    model = F(12, 4)
    pts = bulk_points(model, 3)
    vals, _ = k.kernel_matrix(model, pts)
    ref = np.array([[k.laguerre_oracle(model, a, b) for b in pts] for a in pts])
    for i in range(3):
        for j in range(i + 1, 3):
            det = vals[i, i] * vals[j, j] - vals[i, j] * vals[j, i]
            det_ref = ref[i, i] * ref[j, j] - ref[i, j] * ref[j, i]
            assert abs(det - det_ref) <= 1e-8 * ref[i, i] * ref[j, j]


def test_kernel_matrix_matches_single_evaluations():
    model = F(8, 2, 1)
    pts = [1.0, 2.5, 3.2]
    vals, errs = k.kernel_matrix(model, pts)
    for i, a in enumerate(pts):
        assert abs(vals[i, i] - k.kernel_log(model, a, a).value) <= 1e-9 * (1 + abs(vals[i, i]))
    assert np.all(errs >= 0)


def test_correlation_examples():
    model = F(1, 0)
    assert abs(k.correlation(model, [0.3]) - k.kernel_log(model, 0.3, 0.3).value) <= 1e-12
    assert abs(k.correlation(model, [0.0, 1.0])) <= 1e-10
    with pytest.raises(DomainError):
        k.correlation(model, [0.0, 0.0])
    with pytest.raises(DomainError):
        k.correlation(model, list(range(9)))


def test_correlation_near_coincidence_vanishes():
    model = F(6, 0, 2)
    r2 = k.correlation(model, [3.0, 3.0 + 1e-4])
    assert abs(r2) <= 1e-6 * k.kernel_log(model, 3.0, 3.0).value ** 2


def test_symmetry_positivity_and_gauge():
    model = F(10, 0, 3)
    rng = np.random.default_rng(12)
    pts = sorted(rng.uniform(2.0, 6.0, 4))
    vals, _ = k.kernel_matrix(model, pts)
    assert np.all(np.diag(vals) > 0)
    for i in range(4):
        for j in range(i + 1, 4):
            r_ij = vals[i, i] * vals[j, j] - vals[i, j] * vals[j, i]
            assert r_ij >= 0
    det = np.linalg.det(vals)
    assert det >= 0
    D = np.diag(rng.uniform(0.1, 10, 4))
    gauged = D @ vals @ np.linalg.inv(D)
    assert abs(np.linalg.det(gauged) - det) <= 1e-12 * abs(det)
    assert abs(k.correlation(model, pts[::-1]) - det) <= 1e-10 * abs(det) + 1e-14


def test_truncation_and_panel_robustness():
    model = F(15, 2, 0)
    x, y = 4.0, 4.3
    base = k.kernel_log(model, x, y)
    finer = k.kernel_log(model, x, y, k.ContourConfig(T=2 * base.T, panels=2 * base.panels))
    assert abs(finer.value - base.value) <= CFG.tol * (1 + abs(base.value))


def test_abscissa_independence():
    model = F(6, 1, 2)
    x = 3.0
    vals = [k.kernel_log(model, x, x, k.ContourConfig(c=c)).value for c in (0.5, 2.5, -3.5)]
    assert max(vals) - min(vals) <= 1e-9


def test_abscissa_validation():
    model = F(4, 0)
    for c in (-4.0, -2.0, 0.0):
        with pytest.raises(ContourConfigError):
            k.kernel_log(model, 1.0, 1.0, k.ContourConfig(c=c))


def test_precision_modes_agree():
    model = F(20, 5)
    x = bulk_points(model, 1)[0]
    ref = k.laguerre_oracle(model, x, x)
    for prec in ("double-double", "multiprecision", "auto"):
        assert abs(k.kernel_log(model, x, x, k.ContourConfig(precision=prec)).value - ref) <= 1e-8 * ref


def test_double_precision_refused_when_cancellation_is_large():
    model = F(50, 50)
    x = bulk_points(model, 1)[0]
    with pytest.raises(PrecisionLossError):
        k.kernel_log(model, x, x, k.ContourConfig(precision="double"))


def test_large_N_auto_precision():
    model = F(60, 10)
    x = bulk_points(model, 1)[0]
    ev = k.kernel_log(model, x, x)
    assert ev.precision == "multiprecision"
    assert abs(ev.value - k.laguerre_oracle(model, x, x)) <= 1e-7 * ev.value


def test_scaled_points():
    model = F(100, 100)
    p = d.ModelParams(1, 0.5)
    th = math.pi / 8
    win = k.scaled_points(model, p, th, (0.0, 1.0))
    assert win.points[0] == win.center
    assert abs(win.scale - 100 * abs(d.radial(p, th) * math.sin(th)) / math.pi) <= 1e-12
    assert abs(win.center - (math.log(200) + math.log(d.x_of_theta(p, th)))) <= 1e-12
    assert abs(win.points[1] - win.center - 1 / win.scale) <= 1e-14
    for th in np.linspace(0.05, math.pi / 4 - 0.01, 5):
        assert k.scaled_points(model, p, th, (0.0,)).scale > 0
    with pytest.raises(DomainError):
        k.scaled_points(model, d.ModelParams(2, 0.5), th, (0.0,))


def test_corollary_identity_and_trend():
    p = d.ModelParams(1, 0.5)
    th = math.pi / 8
    devs = []
    for N in (25, 50):
        rep = k.corollary_density_check(F(N, N), p, th)
        devs.append(rep["relative_deviation"])
        r = d.radial(p, th)
        assert abs(rep["rho"] * d.x_of_theta(p, th) * N - N * abs(r * math.sin(th)) / math.pi) <= 1e-10 * N
    assert devs[1] < devs[0]


def test_sine_limit_report():
    rep = k.sine_limit_check(F(25, 25), d.ModelParams(1, 0.5), math.pi / 8, (0.0, 0.5, 1.0))
    for key in ("diagonal_deviation", "pair_determinants", "det_full", "det_sine",
                "gauged_sup_deviation", "max_abs_error_estimate"):
        assert key in rep
    assert len(rep["pair_determinants"]) == 3
    pair = rep["pair_determinants"][0]
    assert pair["target"] == pytest.approx(1 - sinc_pi(0.5) ** 2, abs=1e-15)
    assert pair["deviation"] <= 0.2


def test_total_mass_small():
    mass, window = k.total_mass(F(1, 0))
    assert abs(mass - 1) <= 1e-5
    mass, _ = k.total_mass(F(5, 0))
    assert abs(mass - 5) <= 5e-4
