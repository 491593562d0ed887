import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C

from convexapprox.poly import (EvaluableFunction, Polynomial, cgl_points, coeffs_to_values,
                               gauss_quadrature, values_to_coeffs)

coeff_lists = st.lists(st.floats(-10, 10), min_size=1, max_size=40)


@given(coeff_lists)
def test_evaluation_matches_numpy(c):
    x = np.linspace(-1, 1, 17)
    assert np.allclose(Polynomial(c)(x), C.chebval(x, c), atol=1e-10)


@given(coeff_lists)
def test_values_coeffs_roundtrip(c):
    c = np.asarray(c)
    assert np.allclose(values_to_coeffs(coeffs_to_values(c)), c, atol=1e-9)


@pytest.mark.parametrize("D", [1, 2, 7, 64])
def test_values_to_coeffs_is_interpolation(D):
    x = cgl_points(D)
    v = np.exp(x) * np.sin(3 * x)
    # oracle: square Vandermonde solve at the same nodes
    ref = np.linalg.solve(C.chebvander(x, D), v)
    assert np.allclose(values_to_coeffs(v), ref, atol=1e-11)


@settings(deadline=None)
@given(coeff_lists, st.integers(1, 3))
def test_derivative_matches_numpy(c, m):
    d = Polynomial(c).derivative(m)
    ref = C.chebder(np.asarray(c, dtype=float), m) if len(c) > m else np.zeros(1)
    x = np.linspace(-1, 1, 11)
    assert np.allclose(d(x), C.chebval(x, ref), atol=1e-7 * (1 + np.abs(ref).sum()))


def test_power_coefficients_and_integral():
    p = Polynomial.from_power_coeffs([1, 0, 3])          # 1 + 3x^2
    assert np.isclose(p(0.5), 1.75)
    assert np.isclose(p.definite_integral(), 4.0)
    assert np.isclose(p.antiderivative()(1.0), 4.0)
    assert np.isclose(p.derivative(2)(0.1), 6.0)


def test_linear_constructor():
    L = Polynomial.linear(2.0, -1.0)
    assert np.isclose(L(-1.0), 2.0) and np.isclose(L(1.0), 0.0)


def test_arithmetic():
    a = Polynomial.from_power_coeffs([0, 1])
    b = Polynomial.from_power_coeffs([1, 1])
    x = np.linspace(-1, 1, 5)
    assert np.allclose((a * b)(x), x * (1 + x))
    assert np.allclose((a - b)(x), -1.0)
    assert np.allclose((2.0 + a)(x), 2 + x)


def test_dict_roundtrip():
    p = Polynomial([1.0, -2.0, 0.5])
    q = Polynomial.from_dict(p.to_dict())
    assert np.array_equal(p.coeffs, q.coeffs)
    with pytest.raises(ValueError):
        Polynomial.from_dict({"basis": "monomial", "coeffs": [1.0]})


@pytest.mark.parametrize("g, exact", [
    (np.exp, np.e - 1 / np.e),
    (lambda x: 1 / (1 + 25 * x**2), 2 * np.arctan(5) / 5),
    (np.cos, 2 * np.sin(1)),
])
def test_gauss_vs_clenshaw_curtis(g, exact):
    # two independent rules must agree with the closed form
    gauss = gauss_quadrature(g, -1, 1, 80)
    cc = Polynomial.from_samples(g(cgl_points(256))).definite_integral()
    assert abs(gauss - exact) < 1e-12
    assert abs(cc - exact) < 1e-12


@given(st.integers(1, 12))
def test_gauss_exact_for_degree(m):
    nodes = (m + 2) // 2
    got = gauss_quadrature(lambda x: x**m, 0, 1, nodes)
    assert np.isclose(got, 1 / (m + 1), rtol=1e-13)


def test_gauss_rejects_zero_nodes():
    with pytest.raises(ValueError):
        gauss_quadrature(np.sin, 0, 1, 0)


def test_evaluable_function_derivatives():
    f = EvaluableFunction(np.sin, [np.cos, lambda x: -np.sin(x)])
    assert np.isclose(f.derivative(2)(0.3), -np.sin(0.3))
    assert f.derivative(0) is f
    with pytest.raises(ValueError):
        f.derivative(3)
