import math

import numpy as np
import pytest

from levelconvex.families import Ellipsoid, radial
from levelconvex.quadrature import (Patch, QuadratureError, QuadratureSpec, SurfaceChart,
                                    box_rule, gram_area_element, integrate_fixed,
                                    region_integral_coarea, region_integral_mc,
                                    surface_integral)


def test_box_rule_is_exact_for_polynomials():
    u, w = box_rule((0.0, -1.0), (2.0, 1.0), 8)
    val = np.dot(w, u[:, 0] ** 5 * u[:, 1] ** 4)
    assert val == pytest.approx(2 ** 6 / 6 * 2 / 5, rel=1e-14)


def test_zero_dimensional_box_is_a_point_mass():
    u, w = box_rule((), (), 16)
    assert u.shape == (1, 0) and w.tolist() == [1.0]


def test_sphere_area():
    value, err = surface_integral(radial(3).chart_at(1.0), lambda x: np.ones(len(x)))
    assert value == pytest.approx(4 * math.pi, rel=1e-12)
    assert err < 1e-10


def test_ellipse_perimeter_matches_elliptic_integral():
    value, _ = surface_integral(Ellipsoid([1, 2]).chart_at(1.0), lambda x: np.ones(len(x)))
    assert value == pytest.approx(9.688448220547675, rel=1e-10)


def test_gram_area_matches_analytic_area_element():
    chart = Ellipsoid([1, 1.5, 2]).chart_at(0.7)
    patch = chart.patches[0]
    u, _ = box_rule(patch.lower, patch.upper, 6)
    u = u[(np.abs(np.sin(u[:, 0])) > 0.1)]
    assert np.allclose(gram_area_element(patch, u), patch.area_element(u), rtol=1e-7)


def test_unconverged_integral_raises():
    wiggle = SurfaceChart((Patch((0.0,), (1.0,), lambda u: u, lambda u: np.ones(len(u))),), 1)
    spec = QuadratureSpec(degree=4, refinements=0)
    with pytest.raises(QuadratureError):
        surface_integral(wiggle, lambda x: np.sin(200 * x[:, 0]), spec)


def test_integrate_fixed_reports_abs_scale():
    chart = radial(2).chart_at(1.0)
    value, scale = integrate_fixed(chart, lambda x: x[:, 0], 32)
    assert abs(value) < 1e-14
    # |cos| has kinks, so Gauss-Legendre converges only algebraically here
    assert scale == pytest.approx(4.0, rel=1e-2)


def test_coarea_ball_volume_and_moment():
    ball = radial(3)
    assert region_integral_coarea(ball, lambda x: np.ones(len(x)), 1.0) == pytest.approx(4 * math.pi / 3)
    # int_{|x|<2} |x|^2 = 4 pi 2^5 / 5
    second = region_integral_coarea(ball, lambda x: np.sum(x * x, axis=-1), 2.0)
    assert second == pytest.approx(4 * math.pi * 32 / 5, rel=1e-12)


def test_monte_carlo_is_seeded_and_honest():
    inside = lambda x: np.sum(x * x, axis=-1) < 1
    one = lambda x: np.ones(len(x))
    bbox = [[-1, 1], [-1, 1]]
    a = region_integral_mc(inside, bbox, one, 100_000, seed=7)
    b = region_integral_mc(inside, bbox, one, 100_000, seed=7)
    assert a == b
    assert abs(a[0] - math.pi) < 4 * a[1]


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(degree=2)
    with pytest.raises(ValueError):
        QuadratureSpec(refinements=-1)
