import numpy as np
import pytest

from convexapprox.corpus import get_function
from convexapprox.poly import Polynomial
from convexapprox.verify import (BoundRow, ModulusTable, check_convexity, error_profile,
                                 oracle_best_convex, profile_grid)


def test_convexity_of_square():
    c = check_convexity(Polynomial.from_power_coeffs([0, 0, 1]))
    assert c.passed and c.min_value == pytest.approx(2.0)


def test_cube_fails_at_minus_one():
    c = check_convexity(Polynomial.from_power_coeffs([0, 0, 0, 1]))
    assert not c.passed
    assert c.min_value == pytest.approx(-6.0) and c.argmin == pytest.approx(-1.0)


def test_interior_minimum_is_refined():
    # P'' = 12 (x - 0.3)^2 - 1e-3 dips below zero only near 0.3
    P = Polynomial.from_power_coeffs([0, 0, 0.54 - 5e-4, -1.2, 1.0])
    c = check_convexity(P, tol=1e-12)
    assert c.min_value == pytest.approx(-1e-3, abs=1e-9)
    assert c.argmin == pytest.approx(0.3, abs=1e-5)


def test_profile_of_exact_approximant_is_zero():
    f = get_function("x4")
    P = Polynomial.from_power_coeffs([0, 0, 0, 0, 1])
    row = error_profile(f, P, 2, 16, fid="x4")
    assert (row.ratio_1_5, row.ratio_1_6, row.ratio_1_7, row.ratio_est2) == (0, 0, 0, 0)
    assert row.endpoint_resid == 0.0


def test_profile_counts_vanishing_bounds():
    # f'' = 2 is constant: omega_2 vanishes and every (1.5)-type point is skipped
    f = get_function("x2")
    row = error_profile(f, Polynomial.from_power_coeffs([0.01, 0, 1]), 2, 8)
    assert row.ratio_1_5 == 0.0
    assert row.skipped["1_5"] + row.skipped["1_5_unresolved"] == profile_grid(8).size
    assert row.ratio_est2 > 0


def test_est2_ratio_closed_form():
    # f = x^4, P = x^4 + c (1 - x^2): |f - P| / phi^2 = c, ||f''|| = 12
    f = get_function("x4")
    c, n, r = 1e-3, 8, 2
    P = Polynomial.from_power_coeffs([c, 0, -c, 0, 1])
    row = error_profile(f, P, r, n)
    # rounding in f - P near +-1 is resolved only to about 16 eps / |f - P|
    assert row.ratio_est2 == pytest.approx(n**r * c / 12, rel=0.07)


def test_csv_row_format():
    row = BoundRow("x4", 2, 16, 1.0, 0.0, 0.5, 0.25, 1e-3, 0.0, 32)
    out = row.csv_row()
    assert out[:3] == ["x4", 2, 16] and out[-1] == 32
    assert len(out) == len(BoundRow.CSV_COLUMNS)
    assert BoundRow("x4", 2, 16, 1, 0, 0, 0, 0, 0, None).csv_row()[-1] == ""


def test_modulus_table_square():
    tab = ModulusTable(lambda x: x**2, 2)
    for t in (1e-6, 1e-3, 0.3):
        assert tab(t) == pytest.approx(2 * t * t, rel=1e-6)
    # the running maximum of a moving stencil: omega_1(x^2, t) = 2t - t^2 on [-1, 1]
    assert ModulusTable(lambda x: x**2, 1)(0.5) == pytest.approx(0.75, rel=1e-3)
    assert tab(0.0) == 0.0


def test_oracle_reproduces_feasible_function():
    res = oracle_best_convex(get_function("x2"), 2, grid_m=100)
    assert res.converged and res.error < 1e-12


def test_oracle_quartic_degree_two_vs_lattice():
    # convex quadratics with P(+-1) = 1 are 1 + a (x^2 - 1), a >= 0; scan the lattice in a
    res = oracle_best_convex(get_function("x4"), 2, grid_m=400)
    from convexapprox.poly import cgl_points
    y = cgl_points(399)
    a = np.linspace(0, 3, 30001)[:, None]
    brute = np.min(np.max(np.abs(y**4 - 1 - a * (y**2 - 1)), axis=1))
    assert res.error > 0
    assert res.error == pytest.approx(brute, rel=5e-3)


def test_oracle_solution_is_convex_and_interpolatory():
    f = get_function("exp")
    res = oracle_best_convex(f, 6, grid_m=200)
    P = res.polynomial
    assert np.isclose(P(1.0), np.e) and np.isclose(P(-1.0), 1 / np.e)
    assert np.min(P.derivative(2)(np.linspace(-1, 1, 200))) > -1e-8
