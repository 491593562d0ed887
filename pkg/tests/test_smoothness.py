import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convexapprox.corpus import get_function
from convexapprox.partition import build_partition
from convexapprox.piecewise import PiecewisePolynomial
from convexapprox.smoothness import (Majorant, b_functional, finite_difference, make_majorant_from,
                                     modulus, regularize_table, second_modulus_table)


@given(st.floats(-0.5, 0.5), st.floats(1e-3, 0.5))
def test_second_difference_of_square(x, u):
    assert np.isclose(finite_difference(lambda t: t**2, 2, u, x), 2 * u * u, rtol=1e-9)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_moduli_closed_forms(t):
    # omega_2(x^2, t) = 2 t^2 and omega_1(|x|, t) = t
    assert np.isclose(modulus(lambda x: x**2, 2, t), 2 * t * t, rtol=1e-9)
    assert np.isclose(modulus(np.abs, 1, t), t, rtol=1e-9)


def test_modulus_of_cubic_grid_vs_formula():
    # omega_2(x^3, t) = sup |6 x u^2| over admissible x: 6 t^2 (1 - t)
    t = 0.25
    got = modulus(lambda x: x**3, 2, t, u_points=256, x_points=4096)
    assert np.isclose(got, 6 * t * t * (1 - t), rtol=1e-3)


def test_modulus_table_matches_direct():
    ts = np.array([0.05, 0.2, 0.6])
    tab = second_modulus_table(np.exp, ts)
    direct = [modulus(np.exp, 2, t) for t in ts]
    assert np.allclose(tab, direct, rtol=1e-2)


@settings(deadline=None)
@given(st.lists(st.floats(0, 10), min_size=3, max_size=30), st.integers(1, 4))
def test_regularized_table_is_admissible(vals, e):
    ts = np.geomspace(1e-3, 2, len(vals))
    out = regularize_table(ts, vals, e)
    assert np.all(out >= np.asarray(vals) - 1e-12)
    assert np.all(np.diff(out) >= -1e-9 * out[1:])
    q = out / ts**e
    assert np.all(np.diff(q) <= 1e-9 * q[:-1] + 1e-300)


def test_power_majorant_in_class():
    phi = Majorant.power(4, 2)
    assert phi.check_class() == (True, True)
    assert np.isclose(phi(0.5), 0.5**4)
    assert np.isclose(phi.rescaled(3.0)(0.5), 3 * 0.5**4)


def test_majorant_from_smooth_function():
    phi = make_majorant_from(get_function("exp"), 2)
    assert not phi.degenerate
    assert phi.check_class() == (True, True)
    # dominates omega_2(f'', t) up to the accuracy of the two grid estimates
    t = 0.1
    assert phi.psi(t) >= modulus(np.exp, 2, t) * (1 - 2e-3)


def test_majorant_degenerate_for_quadratic():
    phi = make_majorant_from(get_function("x2"), 2)
    assert phi.degenerate
    assert phi.notes


def test_b_functional_zero_for_global_polynomial():
    p = build_partition(16)
    S = PiecewisePolynomial.from_polynomial(p, lambda x: x**4 - x, 5)
    rep = b_functional(S, Majorant.power(4, 2), 4)
    # only rounding-level disagreement between pieces
    assert rep.total <= 1e-7


def test_b_functional_detects_kink():
    p = build_partition(8)
    S = PiecewisePolynomial.from_piece_samples(p, np.abs, 2)
    rep = b_functional(S, Majorant.power(4, 2), 4)
    assert rep.total > 1.0
