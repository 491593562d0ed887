import numpy as np
import pytest

from convexapprox.corpus import function_from_expression, get_function
from convexapprox.partition import build_partition
from convexapprox.piecewise import PiecewisePolynomial
from convexapprox.splines import (NonConvexError, SplineError, convexity_witness, endpoint_data,
                                  fit_convex_spline, smooth_c1)


def test_convexity_witness():
    assert convexity_witness(lambda x: x**2) is None
    w = convexity_witness(lambda x: x**3)
    assert w is not None
    (a, b, c), v = w
    assert a < b < c <= 0.0 + 1e-12 and v < 0


@pytest.mark.parametrize("fid", ["x4", "exp", "cosh2x", "x6x2", "flat_right"])
@pytest.mark.parametrize("r", [2, 3])
def test_spline_is_convex_c1_and_close(fid, r):
    f = get_function(fid)
    n = 32
    fit = fit_convex_spline(f, r, n)
    S = fit.spline
    assert S.order == r + 2
    assert S.is_c1(1e-9)
    assert S.is_convex(1e-9)
    x = np.linspace(-1, 1, 4001)
    # Jackson-type size: error well below h^2 scale
    assert np.max(np.abs(S(x) - f(x))) < 1e-3
    # Taylor form on the end intervals: value and slope at +-1 are exact
    assert fit.taylor_plus and fit.taylor_minus
    for e in (-1.0, 1.0):
        assert np.isclose(S(e), f(np.array(e)), atol=1e-13)
        assert np.isclose(S.derivative_at(e, 1, side=-int(e)), f.derivative(1)(np.array(e)), atol=1e-11)


def test_spline_interpolates_knots():
    f = get_function("exp")
    S = fit_convex_spline(f, 2, 16).spline
    k = build_partition(16).knots
    assert np.allclose(S(k), f(k), atol=1e-13)


def test_nonconvex_input_rejected():
    with pytest.raises(NonConvexError):
        fit_convex_spline(function_from_expression("x**3"), 2, 16)


def test_r_validated():
    with pytest.raises(ValueError):
        fit_convex_spline(get_function("x4"), 1, 16)


def test_endpoint_constants_flat_right():
    f = get_function("flat_right")      # (1 - x)^5 / 32: derivatives 2..4 vanish at 1
    ep = endpoint_data(f, 3, fit_convex_spline(f, 3, 32))
    assert ep.i_plus is None and ep.D_plus == 0.0 and ep.d_plus == 0.0
    # f''(-1) = 20 * 2^3 / 32 = 5
    assert ep.i_minus == 2
    assert np.isclose(ep.D_minus, 5.0 / (2 * 6))
    assert ep.lower_bound_minus_ok


def test_endpoint_constants_symmetric():
    f = get_function("x4")
    ep = endpoint_data(f, 2, fit_convex_spline(f, 2, 32))
    assert ep.i_plus == ep.i_minus == 2
    assert np.isclose(ep.D_plus, ep.D_minus)
    assert np.isclose(ep.d_plus, ep.D_plus)  # 3^(2 - r) = 1 for r = 2


def test_endpoint_data_requires_taylor_form():
    f = get_function("x4")
    fit = fit_convex_spline(f, 2, 32)
    fit.taylor_plus = False
    with pytest.raises(SplineError):
        endpoint_data(f, 2, fit)


def test_smooth_c1_keeps_smooth_spline():
    p = build_partition(8)
    S = PiecewisePolynomial.from_polynomial(p, lambda x: x**4, 5)
    T = smooth_c1(S)
    x = np.linspace(-1, 1, 101)
    assert np.allclose(T(x), S(x), atol=1e-12)
