import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from boltzspec.quadrature import (gauss_jacobi, gauss_legendre, periodic_uniform, sphere_area,
                                  sphere_rule)


@given(st.integers(1, 12), st.integers(0, 10_000), st.floats(-2, 0), st.floats(0.5, 3))
def test_gauss_legendre_exact_to_degree_2n_minus_1(n, seed, a, width):
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=2 * n)
    b = a + width
    poly = np.polynomial.Polynomial(coef)
    exact = poly.integ()(b) - poly.integ()(a)
    rule = gauss_legendre(n, a, b)
    assert rule.integrate(poly) == pytest.approx(exact, rel=1e-11, abs=1e-11)


@pytest.mark.parametrize("j", [0, 1, 2, 5])
def test_gauss_jacobi_against_adaptive_quadrature(j):
    rule = gauss_jacobi(8, 0.5)
    ref, _ = integrate.quad(lambda x: (1 - x) ** 0.5 * x ** j, -1, 1)
    assert rule.integrate(lambda x: x ** j) == pytest.approx(ref, rel=1e-12)


@given(st.integers(2, 20), st.integers(0, 100))
def test_periodic_uniform_exact_on_trig_polynomials(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(1, n)
    rule = periodic_uniform(n)
    assert abs(rule.integrate(lambda t: np.cos(m * t))) < 1e-12
    assert rule.integrate(lambda t: np.ones_like(t)) == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("d", [2, 3])
def test_sphere_rule_weights_and_second_moment(d):
    pts, w = sphere_rule(d, 12)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    assert w.sum() == pytest.approx(sphere_area(d))
    assert w @ pts[:, 0] ** 2 == pytest.approx(sphere_area(d) / d)


def test_rules_reject_empty():
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        gauss_legendre(3, 1.0, 1.0)
