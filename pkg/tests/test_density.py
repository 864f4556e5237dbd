import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ginprod import density as d
from ginprod.errors import DomainError, EdgeProximityWarning, InadmissibleAngleError

GRID = [(M, y) for M in (1, 2, 3) for y in (0.25, 0.5, 0.75, 1.0)]


def P(M, y):
    return d.ModelParams(M, y)


def mp_density(y, x):
    lo, hi = (1 - math.sqrt(y)) ** 2, (1 + math.sqrt(y)) ** 2
    return math.sqrt((hi - x) * (x - lo)) / (2 * math.pi * y * x)


def fuss_catalan(M, k):
    return math.comb((M + 1) * k, k) / (M * k + 1)


def thetas(p, n):
    out = []
    for lo, hi in d.physical_components(p):
        out.extend(np.linspace(lo, hi, n + 2)[1:-1])
    return out


def test_params_validation():
    for M, y in [(0, 0.5), (1.5, 0.5), (1, 0.0), (1, 1.01), (True, 0.5)]:
        with pytest.raises(DomainError):
            P(M, y)


@pytest.mark.parametrize("M, y, theta, expected", [
    (1, 1.0, math.pi / 4, 1.0),
    (1, 0.5, math.pi / 2, -8.0),
    (1, 0.5, math.pi / 4, 0.0),
])
def test_discriminant_examples(M, y, theta, expected):
    assert abs(d.discriminant(P(M, y), theta) - expected) <= 1e-12


@pytest.mark.parametrize("theta", [0.0, math.pi, -1.0, 4.0])
def test_discriminant_rejects_bad_angle(theta):
    with pytest.raises(DomainError):
        d.discriminant(P(1, 0.5), theta)


def test_radial_examples():
    assert abs(d.radial(P(1, 1.0), math.pi / 3) - 1.0) <= 1e-14
    assert abs(d.radial(P(1, 0.5), math.pi / 4) - math.sqrt(2)) <= 1e-7
    assert abs(d.radial(P(2, 1.0), 1e-9) - 1.5) <= 1e-8


def test_radial_inadmissible():
    with pytest.raises(InadmissibleAngleError) as info:
        d.radial(P(1, 0.5), math.pi / 2)
    assert info.value.discriminant == pytest.approx(-8.0)


@pytest.mark.parametrize("M, y, expected", [
    (1, 1.0, (2.0, 0.0)),
    (1, 0.5, (2 + math.sqrt(2), -2 + math.sqrt(2))),
    (2, 1.0, (1.5, 0.0)),
])
def test_endpoints_r(M, y, expected):
    r0, rpi = d.endpoints_r(P(M, y))
    assert abs(r0 - expected[0]) <= 1e-14 and abs(rpi - expected[1]) <= 1e-14
    assert r0 > 0 and rpi <= 0


def test_x_of_theta_examples():
    assert abs(d.x_of_theta(P(1, 1.0), math.pi / 4) - 2.0) <= 1e-14
    assert abs(d.x_of_theta(P(1, 0.5), math.pi / 4) - 0.5) <= 1e-7
    assert abs(d.x_of_theta(P(1, 0.5), 1e-9) - (1.5 + math.sqrt(2))) <= 1e-8


def test_rho_of_theta_examples():
    assert abs(d.rho_of_theta(P(1, 1.0), math.pi / 4) - 1 / (2 * math.pi)) <= 1e-14
    assert abs(d.rho_of_theta(P(1, 1.0), math.pi / 6) - math.tan(math.pi / 6) / (2 * math.pi)) <= 1e-14


@pytest.mark.parametrize("M, y", GRID)
def test_rho_x_identity(M, y):
    p = P(M, y)
    for th in thetas(p, 40):
        s = d.theta_sample(p, th)
        assert s.admissible and s.physical
        target = abs(s.r * math.sin(th)) / math.pi
        assert abs(s.rho * s.x - target) <= 1e-12 * target


@pytest.mark.parametrize("M, y, expected", [
    (1, 1.0, (0.0, 4.0)),
    (1, 0.5, (1.5 - math.sqrt(2), 1.5 + math.sqrt(2))),
    (2, 1.0, (0.0, 6.75)),
])
def test_support_edges_examples(M, y, expected):
    sup = d.support_edges(P(M, y))
    assert abs(sup.x_minus - expected[0]) <= 1e-14
    assert abs(sup.x_plus - expected[1]) <= 1e-13


@pytest.mark.parametrize("M", range(1, 8))
@pytest.mark.parametrize("y", [0.05, 0.3, 0.6, 0.9, 0.999, 1.0])
def test_support_bounds(M, y):
    sup = d.support_edges(P(M, y))
    top = (M + 1) ** (M + 1) / M ** M
    assert 0.0 <= sup.x_minus < 1.0 < sup.x_plus <= top * (1 + 1e-15)
    if y < 1:
        assert sup.x_minus > 0 and sup.x_plus < top
    else:
        assert sup.x_minus == 0 and sup.x_plus == pytest.approx(top, rel=1e-15)


def test_support_edges_against_polynomial_discriminant():
    # edges are the real positive x where the W-polynomial has a double root
    mpmath.mp.dps = 40
    try:
        for M, y in [(2, 0.5), (3, 0.75)]:
            sup = d.support_edges(P(M, y))
            for x in (sup.x_minus, sup.x_plus):
                coeffs = d.resolvent_coefficients(P(M, y), x)
                roots = mpmath.polyroots([mpmath.mpf(float(c.real)) for c in coeffs],
                                         maxsteps=200, extraprec=200)
                gaps = [abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:]]
                assert min(gaps) <= 1e-6
    finally:
        mpmath.mp.dps = 15


@pytest.mark.parametrize("M, y, x, expected", [
    (1, 1.0, 2.0, 1 / (2 * math.pi)),
    (1, 0.5, 0.5, 2 / math.pi),
    (2, 1.0, 6.75, 0.0),
])
def test_density_at_examples(M, y, x, expected):
    assert abs(d.density_at(P(M, y), x) - expected) <= 1e-12


def test_density_outside_support_is_zero():
    p = P(2, 0.5)
    sup = d.support_edges(p)
    assert np.all(d.density_at(p, [-1.0, 0.0, sup.x_minus / 2, sup.x_plus + 1e-6, 100.0]) == 0.0)


def test_density_edge_warning():
    p = P(1, 0.5)
    sup = d.support_edges(p)
    with pytest.warns(EdgeProximityWarning):
        d.density_at(p, sup.x_plus - 1e-10)


@pytest.mark.parametrize("y", [0.1, 0.25, 0.5, 0.75, 1.0])
def test_density_marchenko_pastur_oracle(y):
    p = P(1, y)
    sup = d.support_edges(p)
    xs = np.linspace(sup.x_minus + 1e-3, sup.x_plus - 1e-3, 400)
    ref = np.array([mp_density(y, x) for x in xs])
    assert np.max(np.abs(d.density_at(p, xs) - ref)) <= 1e-10


@pytest.mark.parametrize("M, y", [(2, 0.5), (3, 0.75), (4, 0.3)])
def test_density_against_high_precision_roots(M, y):
    # independent solve of the W-equation with 50-digit polynomial roots
    p = P(M, y)
    sup = d.support_edges(p)
    mpmath.mp.dps = 50
    try:
        for x in sup.x_minus + sup.width * np.array([0.03, 0.2, 0.5, 0.8, 0.97]):
            X = mpmath.mpf(float(x))
            yy = mpmath.mpf(y)
            # y^M (W + 1 - 1/y) W^M - (W - 1/y) X
            poly = [yy ** M] + [0] * (M + 1)
            poly[1] = yy ** M * (1 - 1 / yy)
            poly[M] -= X
            poly[M + 1] += X / yy
            roots = mpmath.polyroots(poly, maxsteps=400, extraprec=300)
            upper = [w for w in roots if mpmath.im(w) > 1e-30]
            w = min(upper, key=lambda v: mpmath.arg(v))
            ref = float(mpmath.im(w) / (mpmath.pi * X))
            assert abs(d.density_at(p, float(x)) - ref) <= 1e-10 * max(1.0, ref)
    finally:
        mpmath.mp.dps = 15


@pytest.mark.parametrize("M, y", GRID)
def test_parametrization_matches_root_solver(M, y):
    p = P(M, y)
    for th in thetas(p, 200 // len(d.physical_components(p))):
        x = d.x_of_theta(p, th)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EdgeProximityWarning)
            got = d.density_at(p, x)
        assert abs(got - d.rho_of_theta(p, th)) <= 1e-9


@pytest.mark.parametrize("M, y", GRID)
def test_resolvent_residual(M, y):
    p = P(M, y)
    sup = d.support_edges(p)
    for x in sup.x_minus + sup.width * np.linspace(0.01, 0.99, 25):
        root = d.resolvent_root(p, x)
        assert root.residual <= 1e-10 * (1 + x)
        assert root.W.imag > 0
        assert abs(root.W - (x * root.G + 1 / y - 1)) <= 1e-12 * (1 + abs(root.W))


@pytest.mark.parametrize("M, y", [(1, 0.25), (2, 0.5), (3, 0.75), (2, 0.9)])
def test_edge_consistency(M, y):
    p = P(M, y)
    sup = d.support_edges(p)
    assert abs(d.x_of_theta(p, 1e-7) - sup.x_plus) <= 1e-8
    assert abs(d.x_of_theta(p, math.pi - 1e-7) - sup.x_minus) <= 1e-8


@pytest.mark.parametrize("M, y, x0, expected", [
    (1, 1.0, 2.0, math.pi / 4),
    (1, 0.5, 0.5, math.pi / 4),
])
def test_theta_of_x_examples(M, y, x0, expected):
    assert abs(d.theta_of_x(P(M, y), x0) - expected) <= 1e-10


def test_theta_of_x_near_right_edge():
    p = P(1, 0.5)
    th = d.theta_of_x(p, d.support_edges(p).x_plus - 1e-9)
    assert 0 < th < 1e-3


@pytest.mark.parametrize("M, y", GRID)
def test_round_trip(M, y):
    p = P(M, y)
    for th in thetas(p, 30):
        x = d.x_of_theta(p, th)
        assert abs(d.theta_of_x(p, x) - th) <= 1e-10
        assert abs(d.x_of_theta(p, d.theta_of_x(p, x)) - x) <= 1e-12 * (1 + x)


def test_theta_of_x_outside():
    with pytest.raises(DomainError):
        d.theta_of_x(P(1, 1.0), 4.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 1.0), st.floats(0.02, 0.98))
def test_theta_of_x_is_arg_w(M, y, u):
    p = P(M, y)
    sup = d.support_edges(p)
    x = sup.x_minus + u * sup.width
    th = d.theta_of_x(p, x)
    w = d.resolvent_root(p, x).W
    arg = math.atan2(w.imag, w.real)
    assert min(abs(th - arg), abs(th - (math.pi - arg))) <= 1e-7


@pytest.mark.parametrize("M, y", GRID)
def test_normalization(M, y):
    p = P(M, y)
    assert abs(d.moment(p, 0) - 1.0) <= 1e-8
    assert abs(d.cdf(p, d.support_edges(p).x_plus) - 1.0) <= 1e-8


def test_cdf_examples():
    p = P(1, 1.0)
    assert d.cdf(p, -1.0) == 0.0
    assert abs(d.cdf(p, 4.0) - 1.0) <= 1e-8
    assert abs(d.cdf(p, 10.0) - 1.0) <= 1e-8


@pytest.mark.parametrize("M, y", [(1, 0.5), (2, 1.0), (3, 0.99)])
def test_cdf_grid_matches_scalar_and_is_monotone(M, y):
    p = P(M, y)
    sup = d.support_edges(p)
    xs = np.concatenate([[-1.0], sup.x_minus + sup.width * np.linspace(0, 1, 60), [sup.x_plus + 1]])
    grid = d.cdf(p, xs)
    assert np.all(np.diff(grid) >= -1e-15)
    for x, g in zip(xs[::7], grid[::7]):
        assert abs(g - d.cdf(p, float(x))) <= 1e-9


def test_cdf_marchenko_pastur_mpmath():
    y = 0.5
    p = P(1, y)
    lo = (1 - math.sqrt(y)) ** 2
    for x in (0.3, 1.0, 2.0):
        ref = float(mpmath.quad(lambda t: mp_density(y, float(t)), [lo, x]))
        assert abs(d.cdf(p, x) - ref) <= 1e-9


@pytest.mark.parametrize("k, expected", [(2, 3), (3, 12), (4, 55)])
def test_moment_fuss_catalan(k, expected):
    assert abs(d.moment(P(2, 1.0), k) - expected) <= 1e-6 * expected


def test_moment_second_order():
    assert abs(d.moment(P(1, 0.5), 2) - 1.5) <= 1e-9
    for M, y in GRID:
        assert abs(d.moment(P(M, y), 2) - (1 + M * y)) <= 1e-8 * (1 + M * y)


def test_moment_rejects_order():
    with pytest.raises(DomainError):
        d.moment(P(1, 0.5), 13)


def test_saddle_examples():
    s = d.saddle(P(1, 1.0), math.pi / 4)
    assert abs(s.q - 1j) <= 1e-14
    assert abs(s.g_prime) <= 1e-10
    assert d.saddle(P(1, 0.5), math.pi / 8).g_double_prime.real > 0


@pytest.mark.parametrize("M, y", GRID)
def test_saddle_stationary(M, y):
    p = P(M, y)
    for th in thetas(p, 30):
        assert abs(d.saddle(p, th).g_prime) <= 1e-10


def test_saddle_inadmissible():
    with pytest.raises(InadmissibleAngleError):
        d.saddle(P(1, 0.5), math.pi / 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.floats(0.02, 1.0), st.floats(0.001, 0.999))
def test_density_positive_inside(M, y, u):
    p = P(M, y)
    sup = d.support_edges(p)
    assert d.density_at(p, sup.x_minus + u * sup.width) > 0
