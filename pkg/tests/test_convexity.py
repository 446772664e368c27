import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import i0e, i1e

from levelconvex import convexity as cv
from levelconvex.families import (CondBounds, DomainError, Ellipsoid, ModelSpace2D,
                                  TorusDistance, radial)
from levelconvex.harmonics import (eigen_extension_integrand, harmonic_sum,
                                   model_space_harmonic, planar_homogeneous, poly_catalog)
from levelconvex.quadrature import QuadratureSpec

PI = math.pi
ONE2 = poly_catalog(2)[0]
X = poly_catalog(2)[1]
X1_3D = poly_catalog(3)[1]
X1X2_3D = poly_catalog(3)[4]


# -- norms and first variation ----------------------------------------------------

def test_norm_oracles():
    assert cv.norm_H(radial(2), planar_homogeneous(1), 2.0) == pytest.approx(8 * PI)
    assert cv.norm_H(radial(3), poly_catalog(3)[0], 1.0) == pytest.approx(4 * PI)
    assert cv.norm_H(ModelSpace2D(1.0), model_space_harmonic(1.0, 0), PI / 2) == pytest.approx(2 * PI)


def test_first_variation_oracles():
    assert cv.dnorm_analytic(radial(2), X, 1.0) == pytest.approx(3 * PI)
    assert cv.dnorm_analytic(radial(3), poly_catalog(3)[0], 1.0) == pytest.approx(8 * PI)


def test_model_space_norm_closed_form():
    # H = pi tan_K(t/2)^{2k} sin_K(t) for a=1, b=0
    for K, k, t in [(1.0, 2, 0.9), (-1.0, 1, 1.7), (0.0, 3, 0.6)]:
        h = model_space_harmonic(K, k)
        if K > 0:
            tan_half, s = math.tan(t / 2), math.sin(t)
        elif K < 0:
            tan_half, s = math.tanh(t / 2), math.sinh(t)
        else:
            tan_half, s = t / 2, t
        assert cv.norm_H(ModelSpace2D(K), h, t) == pytest.approx(PI * tan_half ** (2 * k) * s)


def test_pairs_must_match():
    with pytest.raises(ValueError):
        cv.norm_H(radial(3), X, 1.0)
    with pytest.raises(ValueError):
        cv.norm_H(ModelSpace2D(1.0), X, 1.0)
    with pytest.raises(ValueError):
        cv.norm_H(ModelSpace2D(1.0), model_space_harmonic(-1.0, 1), 1.0)
    with pytest.raises(DomainError):
        cv.norm_H(radial(2), X, 20.0)


@pytest.mark.parametrize("fam", [Ellipsoid([1, 2]), Ellipsoid([1, 1.5, 2])], ids=str)
def test_scaling_covariance(fam):
    n = fam.ambient_dim
    for h in poly_catalog(n):
        ratio = cv.norm_H(fam, h, 1.7) / cv.norm_H(fam, h, 1.0)
        assert ratio == pytest.approx(1.7 ** (n - 1 + 2 * h.degree), rel=1e-8), h.label


def test_derivative_identity_on_ellipse():
    rep = cv.derivative_identity_check(Ellipsoid([1, 2]), poly_catalog(2)[4], np.linspace(0.5, 2, 5))
    assert rep.passed


def test_growth_check_is_sharp_on_circles():
    row = cv.growth_check(radial(2), X, 1.0).rows[0]
    assert row.lhs == pytest.approx(3 * PI) and row.rhs == pytest.approx(3 * PI)
    assert abs(row.margin) < 1e-12
    assert cv.growth_check(Ellipsoid([1, 2]), X, 1.0).passed
    assert cv.growth_check(ModelSpace2D(-1.0), model_space_harmonic(-1.0, 2), 1.0).passed


def test_divergence_identity():
    for h in poly_catalog(3):
        assert cv.divergence_identity_check(Ellipsoid([1, 1.5, 2]), h, 0.8).passed, h.label


# -- differential inequalities ----------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3])
def test_flat_sharpness(k):
    rep = cv.sphere_theorem_check(0, 0, 2, planar_homogeneous(k), np.linspace(0.5, 1.5, 6),
                                  sharp_tol=1e-6)
    assert rep.passed
    assert np.allclose(rep.curve.N, 2 * k + 1, atol=1e-8)


def test_flat_sharpness_3d():
    rep = cv.sphere_theorem_check(0, 0, 3, X1X2_3D, np.linspace(0.5, 1.5, 5), sharp_tol=1e-6)
    assert rep.passed


@pytest.mark.parametrize("K, k", [(1.0, 1), (-1.0, 2), (0.5, 3)])
def test_model_space_sharpness(K, k):
    rep = cv.sphere_theorem_check(K, K, 2, model_space_harmonic(K, k), np.linspace(0.3, 1.2, 6),
                                  sharp_tol=1e-6)
    assert rep.passed
    assert np.allclose(rep.curve.rho, -K)


def test_sphere_theorem_rejects_unsupported_configurations():
    with pytest.raises(ValueError):
        cv.sphere_theorem_check(0.0, 1.0, 3, X1_3D, np.linspace(0.3, 1, 5))
    with pytest.raises(ValueError):
        cv.sphere_theorem_check(1.0, 0.0, 2, X, np.linspace(0.3, 1, 5))


def test_sphere_theorem_constants():
    tau, rho = cv.sphere_theorem_tau_rho(-1.0, 1.0, 3)
    t = 0.7
    assert tau(t) == pytest.approx(1 / math.tan(t) + 4 * (1 / math.tanh(t) - 1 / math.tan(t)))
    assert rho(t) == pytest.approx(-2 - 4)


def test_ellipse_inequality_with_constants():
    e = Ellipsoid([1, 2])
    A, B = 19.75, -32.8125
    rep = cv.differential_inequality_check(e, poly_catalog(2)[4], np.linspace(0.5, 2, 7), 1e-4,
                                           tau=lambda t: A / t, rho=lambda t: B / t ** 2)
    assert rep.passed


def test_too_few_points_rejected():
    with pytest.raises(ValueError, match="at least 5"):
        cv.differential_inequality_check(radial(2), X, [0.5, 1.0, 1.5, 2.0])


class _BadBounds(Ellipsoid):
    @property
    def bounds(self):
        return CondBounds(m=lambda t: 0 * t, M=lambda t: 0 * t + 1, g=lambda t: 0 * t,
                          K=lambda t: 0 * t - 2)


def test_negative_tau_reports_hypothesis_violated():
    rep = cv.differential_inequality_check(_BadBounds([1, 2]), X, np.linspace(0.5, 2, 5))
    assert rep.status == "hypothesis violated" and not rep.passed and rep.rows == []


def test_margins_stable_under_refinement():
    grid = np.linspace(0.5, 2, 5)
    h = poly_catalog(2)[4]
    a = cv.differential_inequality_check(Ellipsoid([1, 2]), h, grid).curve.margin
    b = cv.differential_inequality_check(Ellipsoid([1, 2]), h, grid,
                                         spec=QuadratureSpec(degree=128)).curve.margin
    assert np.max(np.abs(a - b)) < 1e-6


def test_eigen_convexity_matches_bessel_oracle():
    k = 1.0
    grid = np.linspace(0.3, 2.0, 8)
    rep = cv.eigen_convexity_check(2, k, grid)
    assert rep.passed
    x = 2 * k * grid
    ratio = i1e(x) / i0e(x)
    expected = 4 * k * k * (1 - ratio ** 2)
    got = np.array([r.margin for r in rep.rows])
    assert np.allclose(got, expected, atol=2e-6)
    # H(t) = 2 pi t I0(2 k t)
    assert cv.norm_H(radial(2), eigen_extension_integrand(2, k), 1.0) == pytest.approx(
        2 * PI * i0e(2 * k) * math.exp(2 * k))


# -- integrated forms -------------------------------------------------------------

def test_solve_alpha():
    assert cv.solve_alpha(2, 1, 2, 4) == pytest.approx(1 / 3)
    assert cv.solve_alpha(1, 0.5, 1, 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        cv.solve_alpha(0.5, 1, 2, 4)
    with pytest.raises(ValueError):
        cv.solve_alpha(2, 1, 1, 4)


def test_three_point_equality_for_power_law():
    t = (0.5, 1.0, 2.0)
    H = tuple(PI * s ** 3 for s in t)
    row = cv.three_point_check(1.0, 0.0, t, H)
    assert row.passed and abs(row.margin) < 1e-10


@settings(max_examples=60, deadline=None)
@given(A=st.floats(1.0, 25.0), t0=st.floats(0.1, 1.0), r1=st.floats(1.05, 3.0),
       r2=st.floats(1.05, 3.0))
def test_alpha_lies_in_unit_interval(A, t0, r1, r2):
    t1 = t0 * r1
    alpha = cv.solve_alpha(A, t0, t1, t1 * r2)
    assert -1e-12 <= alpha <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(A=st.floats(1.0, 6.0), B=st.floats(-10.0, 0.0), c=st.floats(-2.0, 2.0))
def test_three_point_holds_for_extremal_profiles(A, B, c):
    # H solving (log H)'' + (A/t)(log H)' = B/t^2 exactly (equality in the bound)
    if abs(A - 1) < 1e-9:
        logH = lambda t: c * math.log(t) + 0.5 * B * math.log(t) ** 2
    else:
        logH = lambda t: c * t ** (1 - A) / (1 - A) + B / (A - 1) * math.log(t)
    t = (0.4, 0.9, 1.7)
    row = cv.three_point_check(A, B, t, tuple(math.exp(logH(s)) for s in t))
    assert abs(row.margin) < 1e-8 * (1 + abs(row.rhs))


def test_three_point_on_ellipse():
    e = Ellipsoid([1, 2])
    rep = cv.three_point_suite(e, X, 19.75, -32.8125, [0.5, 1.0, 2.0])
    assert rep.passed


def test_three_point_rejects_small_A():
    with pytest.raises(ValueError):
        cv.three_point_check(0.9, 0.0, (1, 2, 3), (1, 2, 3))


def test_frequency_constant_and_strictly_increasing():
    grid = np.linspace(0.2, 2.0, 10)
    c = cv.build_curve(radial(2), X, grid)
    NH = cv.frequency_function(1.0, 0.0, c)
    assert np.allclose(NH, 3.0, atol=1e-10)
    mixed = harmonic_sum([X, poly_catalog(2)[4]])
    c = cv.build_curve(radial(2), mixed, grid)
    assert np.allclose(c.N, (3 + 5 * grid ** 2) / (1 + grid ** 2), rtol=1e-10)
    assert np.all(np.diff(c.N) > 0)
    assert cv.frequency_monotonicity_check(1.0, 0.0, c).passed


def test_frequency_on_ellipse_and_point_count():
    c = cv.build_curve(Ellipsoid([1, 2]), X, np.linspace(0.5, 2, 10))
    assert cv.frequency_monotonicity_check(19.75, -32.8125, c).passed
    short = cv.build_curve(radial(2), X, np.linspace(0.5, 2, 9))
    with pytest.raises(ValueError):
        cv.frequency_monotonicity_check(1.0, 0.0, short)


# -- Hormander identity and bound ----------------------------------------------------

def test_hormander_trivial_cases():
    rep = cv.hormander_identity_check(radial(2), X, 1.0)
    assert rep.passed and abs(rep.rows[0].lhs) < 1e-12 and abs(rep.rows[0].rhs) < 1e-10
    rep = cv.hormander_identity_check(Ellipsoid([1, 2]), ONE2, 1.0)
    assert rep.rows[0].lhs == 0 and rep.rows[0].rhs == 0


def test_hormander_bound_sharp_on_unit_sphere():
    row = cv.hormander_bound_check(radial(3), X1_3D, 1.0).rows[0]
    assert row.lhs == pytest.approx(4 * PI / 3)
    assert row.rhs == pytest.approx(4 * PI / 3)
    assert abs(row.margin) < 1e-10


@pytest.mark.parametrize("h", poly_catalog(2)[1:], ids=lambda h: h.label)
def test_hormander_identity_and_bound_on_ellipse(h):
    e = Ellipsoid([1, 2])
    assert cv.hormander_identity_check(e, h, 1.0).passed
    assert cv.hormander_bound_check(e, h, 1.0).passed


# -- counterexample, mean value, monotonicity ----------------------------------------

def test_square_flux_and_exact_tangential_form():
    for r in cv.square_counterexample([1, 2, 3]):
        assert r.flux == pytest.approx(math.cosh(2 * r.nu) - 1, rel=1e-10)
        assert r.tangential_minus_normal == pytest.approx(r.tangential_exact, rel=1e-10)
        assert r.tangential_reference == pytest.approx(2 * r.tangential_exact)


def test_square_series_oracles():
    sinh2 = sum(2 ** (2 * j + 1) / math.factorial(2 * j + 1) for j in range(20))
    sin2 = sum((-1) ** j * 2 ** (2 * j + 1) / math.factorial(2 * j + 1) for j in range(20))
    cosh4 = sum(4 ** (2 * j) / math.factorial(2 * j) for j in range(25))
    ref1, _, flux1 = cv.square_reference_forms(1.0)
    assert ref1 == pytest.approx(-math.sqrt(2) * (2 * sinh2 - 2 * sin2), rel=1e-12)
    assert ref1 == pytest.approx(-7.6864, abs=1e-4)
    assert cv.square_reference_forms(2.0)[2] == pytest.approx(cosh4 - 1, rel=1e-12)


def test_square_ratio_grows_without_bound():
    rows = cv.square_counterexample([1, 2, 3, 4, 6, 8])
    ratios = [r.ratio for r in rows]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    # the growth is roughly linear in nu: a factor of about 4 from nu=1 to nu=4
    assert ratios[3] / ratios[0] == pytest.approx(4.0657, abs=1e-3)


def test_square_nu_cap():
    with pytest.raises(ValueError):
        cv.square_counterexample([9])


def test_mean_value():
    h = harmonic_sum([poly_catalog(3)[0], X1X2_3D])
    rep = cv.mean_value_check(radial(3), h, np.linspace(0.5, 2, 6))
    assert rep.passed
    assert all(r.lhs == pytest.approx(1.0, abs=1e-12) for r in rep.rows)
    assert cv.mean_value_check(radial(2), X, np.linspace(0.5, 2, 4)).passed
    rep = cv.mean_value_check(Ellipsoid([1, 2]), X, np.linspace(0.5, 2, 4))
    assert rep.status == "hypothesis not met" and not rep.rows


def test_monotonicity():
    assert cv.monotonicity_check(radial(3), X1_3D, np.linspace(0.5, 2, 6)).passed
    assert cv.monotonicity_check(Ellipsoid([1, 2]), ONE2, np.linspace(0.5, 2, 6)).passed
    h = model_space_harmonic(1.0, 0)
    capped = cv.monotonicity_check(ModelSpace2D(1.0), h, np.linspace(0.2, PI / 2, 8))
    assert capped.passed
    wide = ModelSpace2D(1.0, t_max=2.8)
    rep = cv.monotonicity_check(wide, h, np.linspace(0.2, 2.8, 8))
    assert not rep.passed
    failing = [r.t for r in rep.rows if not r.passed]
    assert min(failing) > PI / 2


def test_monotonicity_notes_negative_m():
    rep = cv.monotonicity_check(TorusDistance(3, 1, 0.3), poly_catalog(3)[0], [0.1, 0.3, 0.5])
    assert rep.notes


def test_report_verdict_rule():
    rows = [cv.CheckRow("x", 1.0, 1.0, 1.0 + 5e-5, 1e-4), cv.CheckRow("x", 2.0, 0.0, 1.0, 1e-4)]
    assert cv.VerificationReport("x", rows[:1]).passed
    assert not cv.VerificationReport("x", rows).passed
    assert cv.CheckRow("x", 1.0, float("nan"), 0.0, 1.0).verdict == "fail"
