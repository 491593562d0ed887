import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C

from convexapprox.kernel_checks import pair_envelopes, ramp_q_envelope, step_envelopes
from convexapprox.kernels import (KernelParams, default_params, kernel_bank, kernel_dump,
                                  kernel_roots, normalization_report, pair_kernels, pp_pair,
                                  q_kernel, t_kernel, tau_hat, validate_params)
from convexapprox.partition import build_partition
from convexapprox.poly import Polynomial, cgl_points, gauss_quadrature


def _t_oracle(n, j, x):
    # cos(2n arccos x) = T_2n(x), sin(2n arccos x) = sqrt(1 - x^2) U_{2n-1}(x)
    N = 2 * n
    x0, xbar = kernel_roots(n, j)
    T = C.chebval(x, np.eye(N + 1)[N])
    s = np.sin(N * np.arccos(x))
    return (T / (x - x0)) ** 2 + (s / (x - xbar)) ** 2


@pytest.mark.parametrize("alpha, k, xi, mu", [(6, 4, 3, 9), (8, 5, 4, 11), (2, 4, 1, 7)])
def test_default_params(alpha, k, xi, mu):
    p = default_params(alpha=alpha, k=k)
    assert (p.xi, p.mu, p.beta) == (xi, mu, k + 7)
    assert p.xi == math.ceil(alpha / 2)


def test_escalation_raises_mu_first():
    p = KernelParams(2.0, 11.0, 1, 5)
    assert p.escalate().mu == 7 and p.escalate().xi == 1


@pytest.mark.parametrize("n, j", [(4, 1), (4, 3), (9, 5), (16, 16)])
def test_t_kernel_matches_trig_form(n, j):
    x = np.linspace(-0.999, 0.999, 501)
    # the direct quotient is 0/0 at the roots
    x = x[np.min(np.abs(x[:, None] - np.array(kernel_roots(n, j))), axis=1) > 1e-6]
    assert np.allclose(t_kernel(n, j, x), _t_oracle(n, j, x), rtol=1e-8)


@pytest.mark.parametrize("n, j", [(5, 2), (12, 7)])
def test_t_kernel_is_polynomial_of_degree(n, j):
    D = 4 * n - 2
    vals = t_kernel(n, j, cgl_points(D + 6))
    c = Polynomial.from_samples(vals).coeffs
    assert np.max(np.abs(c[D + 1:])) <= 1e-10 * np.max(np.abs(c))
    assert np.all(vals > 0)


def test_t_kernel_near_root_is_smooth():
    x0, _ = kernel_roots(8, 3)
    x = x0 + np.array([-1e-9, 0.0, 1e-9])
    v = t_kernel(8, 3, x)
    assert np.all(np.isfinite(v)) and np.ptp(v) < 1e-5 * v[1]


@pytest.mark.parametrize("n", [8, 16])
def test_normalization_and_mean_condition(n):
    prm = default_params(alpha=6, k=4)
    rep = normalization_report(kernel_bank(n, 0, 0, prm.xi, prm.mu))
    assert np.max(np.abs(rep["tau_end_error"])) <= 1e-9
    assert np.all(rep["inside"])


def test_tau_integral_against_gauss():
    # bank integrals (exact series moments) vs Gauss-Legendre on the polynomial
    prm = default_params(alpha=6, k=4)
    bank = kernel_bank(8, 0, 0, prm.xi, prm.mu)
    for j in (1, 4, 8):
        tau = bank.tau(j)
        g = gauss_quadrature(tau, -1, 1, bank.degree // 2 + 2)
        assert np.isclose(g, bank.tau_integrals[j - 1], rtol=1e-10, atol=1e-14)


def test_tau_hat_is_a_monotone_step():
    prm = default_params(alpha=6, k=4)
    tau, d = tau_hat(8, 3, 0, 0, prm.xi, prm.mu)
    x = np.linspace(-1, 1, 2001)
    v = tau(x)
    assert d > 0
    assert abs(v[0]) < 1e-12 and abs(v[-1] - 1) < 1e-9
    assert np.all(np.diff(v) >= -1e-12)


def test_q_kernel_reproduces_ramp_at_one():
    prm = default_params(alpha=6, k=4)
    n, j = 8, 3
    q, lam = q_kernel(n, j, 0, 0, prm.xi, prm.mu)
    xj = build_partition(n).knots[j]
    assert 0 < lam < 1
    assert np.isclose(q(1.0), 1 - xj, atol=1e-10)
    assert abs(q(-1.0)) < 1e-14


@pytest.mark.parametrize("n", [4, 8])
def test_pair_normalization_and_signs(n):
    prm = default_params(alpha=6, k=4)
    fine = build_partition(2 * n).knots
    x = np.linspace(-1, 1, 3001)
    for j in range(1, n):
        p, pt = pp_pair(n, j, prm.xi, prm.mu)
        assert np.isclose(p(1.0), 1 - build_partition(n).knots[j], atol=1e-10)
        assert np.isclose(pt(1.0), 1 - fine[2 * j - 1], atol=1e-10)
        assert abs(p(-1.0)) < 1e-14
        assert np.min(p.derivative(2)(x)) >= -1e-9 * np.max(np.abs(p.derivative(2)(x)))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=7, max_size=7))
def test_nonnegative_combinations_are_convex(a):
    prm = default_params(alpha=6, k=4)
    pk = pair_kernels(8, prm)
    P = pk.combination(a_p=np.array(a))
    d2 = P.derivative(2)(np.linspace(-1, 1, 801))
    assert np.min(d2) >= -1e-9 * max(1.0, np.max(np.abs(d2)))


def test_pp_pair_rejects_bad_index():
    with pytest.raises(ValueError):
        pp_pair(4, 4, 3, 9)


def test_validate_params_accepts_defaults():
    prm, log = validate_params(default_params(alpha=6, k=4), ns=(8,))
    assert prm == default_params(alpha=6, k=4)
    assert log[-1]["failures"] == []


def test_kernel_dump_fields():
    d = kernel_dump(8, 2, default_params(alpha=6, k=4))
    assert set(d) == {"n", "j", "params", "degree", "d_j", "lambda_j"}
    assert 0 < d["lambda_j"] < 1


def test_envelopes_small_n():
    prm = default_params(alpha=6, k=4)
    env = pair_envelopes(8, prm, extra_grid_size=500)
    assert env["p_min_second"] >= 0.0
    assert env["pt_max_outside"] <= 0.0
    assert np.isfinite(env["second"]) and env["p_floor"] > 0
    st_env = step_envelopes(8, prm, extra_grid_size=500)
    assert st_env["tau_min_first"] >= 0.0 and st_env["signed_max_outside"] <= 0.0
    assert np.isfinite(ramp_q_envelope(8, prm, extra_grid_size=500))
