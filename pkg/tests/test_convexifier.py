import numpy as np
import pytest

from convexapprox.convexifier.approx_s3 import NBelowThreshold, approx_S3, linearize_end
from convexapprox.convexifier.calibrate import load_constants
from convexapprox.convexifier.classify import block_size_for, classify, mask_second, padded_n
from convexapprox.convexifier.correcting import (BlockSizeError, check_correcting_Q, correcting_Q)
from convexapprox.convexifier.engine import PipelineFailure, assemble
from convexapprox.convexifier.simultaneous import (check_D, kernel_window, simultaneous_D,
                                                   truncated_power_weights, window_sides)
from convexapprox.convexifier.small import (SmallHypothesisError, convexify_small,
                                            small_error_ratio, small_hypotheses)
from convexapprox.convexifier.split import split
from convexapprox.corpus import get_function
from convexapprox.kernels import default_params, kernel_bank
from convexapprox.partition import build_partition
from convexapprox.piecewise import PiecewisePolynomial
from convexapprox.smoothness import Majorant, make_majorant_from
from convexapprox.splines import fit_convex_spline
from convexapprox.verify import check_convexity

PRM = default_params(alpha=6, k=4)
PHI = Majorant.power(4, 2)


def chain(n, pattern):
    """Convex piecewise linear spline, flat on I_n, slope jumps pattern(j) * phi(rho)/rho."""
    p = build_partition(n)
    xk = p.knots[1:-1]
    rk = p.rho(xk)
    a = pattern(np.arange(1, n)) * PHI(rk) / rk
    slopes = np.zeros(n)
    for j in range(n - 1, 0, -1):
        slopes[j - 1] = slopes[j] + a[j - 1]
    v = np.zeros(n + 1)
    for j in range(n, 0, -1):
        v[j - 1] = v[j] + slopes[j - 1] * p.h[j - 1]
    rows = np.zeros((n, 2))
    rows[:, 0] = 0.5 * (v[:-1] + v[1:])
    rows[:, 1] = 0.5 * (v[:-1] - v[1:])
    return PiecewisePolynomial(p, rows)


# ---------------------------------------------------------------- blocks


@pytest.mark.parametrize("k, c3", [(4, 8), (5, 16), (8, 16), (9, 32)])
def test_block_size(k, c3):
    assert block_size_for(k) == c3


@pytest.mark.parametrize("n, c3, out", [(16, 8, 16), (17, 8, 24), (1, 16, 16)])
def test_padded_n(n, c3, out):
    assert padded_n(n, c3) == out


def test_calibrated_constants_present():
    for k in (4, 5):
        c = load_constants(k)
        assert {"kappa", "C1", "C_Qu2", "C2"} <= set(c)
        assert 0 < c["kappa"] <= 1 and c["C1"] > 0 and c["C2"] >= 1


# ------------------------------------------------------- small part


def test_small_chain_convex_and_accurate():
    S = chain(16, lambda j: np.where(j % 2, 1.0, 0.1))
    rep = small_hypotheses(S, PHI)
    assert rep["ok"]
    res = convexify_small(S, PHI, PRM)
    assert np.all(res.jumps >= 0)
    assert check_convexity(res.P, 1e-9, second=res.second).passed
    ratio, _ = small_error_ratio(S, res, PHI, PRM.alpha)
    assert ratio < 1.0


def test_small_hypothesis_violation_reports():
    S = chain(16, lambda j: 50.0 + 0 * j)  # jumps far above phi(rho)/rho
    with pytest.raises(SmallHypothesisError) as exc:
        convexify_small(S, PHI, PRM)
    assert not exc.value.report["jumps1"]["ok"]
    assert exc.value.report["jumps1"]["knots"]


def test_linearize_end_shape():
    f = get_function("flat_right")
    S = fit_convex_spline(f, 2, 16).spline
    T, jumps = linearize_end(S, +1)
    assert T.n == 32
    d2 = T.derivative(2)
    assert np.allclose(d2.coeffs[:2], 0.0, atol=1e-12)
    # continuous at every knot, tangent at 1
    assert np.max(np.abs(T.knot_jumps(0))) < 1e-13
    assert np.isclose(T(1.0), S(1.0)) and np.isclose(T.derivative_at(1.0, 1, -1), S.derivative_at(1.0, 1, -1))
    assert set(jumps) == {"xi", "x1"}


def test_approx_s3_needs_larger_n_when_end_curved():
    f = get_function("x4")
    S = fit_convex_spline(f, 2, 16).spline
    with pytest.raises(NBelowThreshold):
        approx_S3(S, PHI, PRM, d_plus=1.0, d_minus=1.0)


# ------------------------------------------------------- D polynomial


@pytest.mark.parametrize("J, m, n1, side, first", [
    (10, 2, 32, 0, 10), (10, 3, 32, 0, 9), (10, 2, 32, 1, 8), (10, 2, 32, -1, 11), (1, 3, 32, 1, 1),
    (31, 3, 32, -1, 29),
])
def test_kernel_window(J, m, n1, side, first):
    w = kernel_window(J, m, n1, side)
    assert w[0] == first and w.size == m + 1 and w[-1] <= n1


def test_truncated_power_moments():
    bank = kernel_bank(32, 0, 0, PRM.xi, PRM.mu)
    for side in (-1, 0, 1):
        idx, w = truncated_power_weights(bank, 12, 3, side)
        M = bank.moments[idx - 1, :4].T
        assert np.allclose(M @ w, (1 - bank.partition.knots[12]) ** np.arange(4), rtol=1e-9)


def test_window_sides_point_to_curved_piece():
    S = fit_convex_spline(get_function("x4"), 2, 16).spline
    T = mask_second(S, range(5, 17))  # linear on I_1..I_4
    sides = window_sides(T)
    assert sides[3] == -1       # knot x_4: right piece flat, left piece curved
    assert np.all(sides[:3] == 0) and np.all(sides[5:] == 0)


def test_D_reproduces_global_polynomial():
    S = PiecewisePolynomial.from_polynomial(build_partition(8), lambda x: x**3 + x, 4)
    res = simultaneous_D(S, PRM)
    x = np.linspace(-1, 1, 101)
    assert np.allclose(res.D(x), S(x), atol=1e-12)


def test_D_convex_on_masked_spline():
    f = get_function("cosh2x")
    S = fit_convex_spline(f, 2, 16).spline
    S4 = mask_second(S, range(4, 14))
    res = simultaneous_D(S4, PRM)
    cert = check_convexity(res.D, 1e-9, second=res.second)
    assert cert.passed
    c = check_D(S4, res, make_majorant_from(f, 2), PRM.alpha, {"all": (1, 16)})
    assert np.isfinite(c.value_constant) and np.isfinite(c.windows["all"])


# ------------------------------------------------- classify and split


def test_classification_sets():
    f = get_function("x4")
    S = fit_convex_spline(f, 2, 32).spline
    phi = make_majorant_from(f, 2)
    rep = classify(S, phi, C2=128.0, k=4)
    assert set(rep.F) <= set(rep.E)
    assert len(rep.E) % rep.C3 == 0
    assert set(rep.J) <= set(rep.F)
    parts = split(S, rep)
    inv = parts.invariants(S)
    assert inv["ok"], inv


def test_huge_threshold_marks_everything_uc():
    f = get_function("exp")
    S = fit_convex_spline(f, 2, 16).spline
    rep = classify(S, make_majorant_from(f, 2), C2=1e12, k=4)
    assert rep.uc_indices == set(range(1, 17)) and rep.E == [] and rep.F == []


def test_classify_requires_block_multiple():
    S = fit_convex_spline(get_function("exp"), 2, 12).spline
    with pytest.raises(ValueError):
        classify(S, PHI, 1.0, 4)


# ------------------------------------------------- correcting polynomial


def test_correcting_q_conclusions():
    c = load_constants(4)
    Q = correcting_Q(32, (9, 16), [9, 16], PHI, PRM, c["kappa"])
    chk = check_correcting_Q(Q, PHI, 4)
    assert chk.passes(c["C1"], c["C_Qu2"]), chk
    assert chk.min_second_outside >= 0.0
    assert "below-paper-scale blocks" in Q.flags


def test_correcting_q_strict_size():
    with pytest.raises(BlockSizeError):
        correcting_Q(32, (9, 16), [9], PHI, PRM, 1.0, strict=True)


def test_correcting_q_validates_sets():
    with pytest.raises(ValueError):
        correcting_Q(32, (9, 16), [20], PHI, PRM, 1.0)


# ---------------------------------------------------------- pipeline


def test_assemble_certified():
    f = get_function("exp")
    out = assemble(f, 3, 32, fid="exp")
    cert = out.certificates
    assert cert["convexity"]["passed"]
    assert max(cert["endpoint_residuals"]) <= 1e-12
    assert all(q["passes"] for q in cert["Q_checks"])
    assert out.report["N_detected"] >= 32
    x = np.linspace(-1, 1, 2001)
    assert np.max(np.abs(out(x) - f(x))) < 1e-4


def test_assemble_validates_r():
    with pytest.raises(ValueError):
        assemble(get_function("x4"), 1, 16)


def test_assemble_escalation_limit():
    with pytest.raises(PipelineFailure) as exc:
        assemble(get_function("x4"), 2, 16, n_cap=16, c2_steps=0)
    assert exc.value.attempts
