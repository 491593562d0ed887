"""Convex polynomial approximation of a convex spline with small second derivative.

The spline is replaced by its piecewise linear interpolant at the knots, and
every slope jump ``a_j >= 0`` at ``x_j`` by ``a_j p_j``.  The result is a
nonnegative combination of convex polynomials plus a linear function.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..kernel_checks import CombinationProfile, resolution_grid
from ..kernels import KernelParams, pair_kernels
from ..partition import build_partition
from ..piecewise import PiecewisePolynomial
from ..poly import Polynomial


class SmallHypothesisError(ValueError):
    """The input spline violates a hypothesis; ``report`` says which and where."""

    def __init__(self, report):
        self.report = report
        failed = [k for k, v in report.items() if isinstance(v, dict) and not v["ok"]]
        super().__init__(f"hypotheses violated: {', '.join(failed)}")


@dataclass
class SmallResult:
    P: Polynomial
    second: Polynomial
    jumps: np.ndarray
    value_at_minus1: float
    slope_at_minus1: float
    params: KernelParams
    report: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.jumps.size + 1


def linear_interpolant_data(S: PiecewisePolynomial):
    """Knot values, interval slopes and slope jumps of the piecewise linear interpolant."""
    p = S.partition
    v = S.values_at_knots()
    slopes = (v[:-1] - v[1:]) / p.h          # slope on I_j, j = 1..n
    jumps = slopes[:-1] - slopes[1:]          # at x_j, j = 1..n-1
    return v, slopes, jumps


def small_hypotheses(S: PiecewisePolynomial, phi, tol=1e-9, per_interval=32):
    """Check the three hypotheses and report the worst point of each."""
    p = S.partition
    n = p.n
    d2 = S.derivative(2)
    x = S.interior_grid(per_interval)
    vals = np.empty_like(x)
    for j in range(1, n + 1):
        vals[j - 1] = d2.eval_piece(j, x[j - 1])
    rho = p.rho(x)
    ratio = np.abs(vals) * rho**2 / phi(rho)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    rep = {}
    inner = ratio[1:-1] if n > 2 else np.zeros((1, 1))
    i = np.unravel_index(int(np.argmax(inner)), inner.shape)
    rep["approx21"] = {"ok": bool(inner[i] <= 1 + tol), "worst": float(inner[i]),
                       "interval": int(i[0]) + 2, "x": float(x[1:-1][i]) if n > 2 else None}
    jumps = S.knot_jumps(1)
    xk = p.knots[1:-1]
    rk = p.rho(xk)
    bound = phi(rk) / rk
    jscale = max(float(np.max(np.abs(S.derivative().values_at_knots()))), 1e-300)
    neg = jumps < -tol * jscale
    over = jumps > bound * (1 + tol) + tol * jscale
    bad = np.nonzero(neg | over)[0]
    rep["jumps1"] = {"ok": bool(bad.size == 0), "knots": (bad + 1).tolist(),
                     "worst": float(np.max(jumps / bound)) if jumps.size else 0.0}
    ends = np.concatenate([np.abs(vals[0]), np.abs(vals[-1])])
    rep["approx31"] = {"ok": bool(np.max(ends) <= tol * max(scale, 1.0)), "worst": float(np.max(ends))}
    rep["ok"] = rep["approx21"]["ok"] and rep["jumps1"]["ok"] and rep["approx31"]["ok"]
    return rep


def convexify_small(S: PiecewisePolynomial, phi, params: KernelParams, check=True, tol=1e-9):
    """Convex polynomial ``S_1(-1) + S_1'(-1)(x+1) + sum a_j p_j``.

    Parameters
    ----------
    S : PiecewisePolynomial
        Convex C0 spline on a Chebyshev partition.
    phi : callable
        Majorant in the hypotheses (already scaled by any constant).
    params : KernelParams
    check : bool
        Verify the hypotheses first and raise :class:`SmallHypothesisError`.

    Examples
    --------
    A linear spline is reproduced exactly:

    >>> from convexapprox.partition import build_partition
    >>> from convexapprox.kernels import default_params
    >>> from convexapprox.piecewise import PiecewisePolynomial
    >>> S = PiecewisePolynomial.from_polynomial(build_partition(8), lambda x: 2 * x + 1, 2)
    >>> res = convexify_small(S, lambda t: t**4, default_params(), check=False)
    >>> float(abs(res.P(0.3) - 1.6)) < 1e-12
    True
    """
    report = small_hypotheses(S, phi, tol) if check else {}
    if check and not report["ok"]:
        raise SmallHypothesisError(report)
    n = S.n
    v, slopes, jumps = linear_interpolant_data(S)
    jscale = max(float(np.max(np.abs(slopes))), 1e-300)
    if np.any(jumps < -tol * jscale):
        raise SmallHypothesisError({"convexity": {"ok": False, "knots": (np.nonzero(jumps < 0)[0] + 1).tolist()}})
    jumps = np.clip(jumps, 0.0, None)
    pk = pair_kernels(n, params)
    value0, slope0 = float(v[-1]), float(slopes[-1])
    if np.any(jumps):
        P = pk.combination(a_p=jumps) + Polynomial.linear(value0, slope0)
        second = _mixture_second(pk, jumps, None)
    else:
        P = Polynomial.linear(value0, slope0)
        second = Polynomial.zero()
    return SmallResult(P, second, jumps, value0, slope0, params, report)


def _mixture_second(pk, a_p, a_pt):
    total = None
    for coeffs, bank, wfun in ((a_p, pk.plain, pk.weights_p), (a_pt, pk.signed, pk.weights_pt)):
        if coeffs is None:
            continue
        w = np.zeros(2 * pk.n)
        for j in np.nonzero(coeffs)[0] + 1:
            w += coeffs[j - 1] * wfun(j)
        part = Polynomial.from_samples(bank.mixture_density(w))
        total = part if total is None else total + part
    return total if total is not None else Polynomial.zero()


def error_grid(n, per_interval=16, end_points=24):
    """Sorted grid with interior points of every interval and points clustering at +-1."""
    p = build_partition(n)
    u = np.linspace(-1 + 1 / 64, 1 - 1 / 64, per_interval)
    pts = (p.midpoints()[:, None] + 0.5 * p.h[:, None] * u[None, :]).ravel()
    e = np.geomspace(1e-14, 0.5 * p.h[0], end_points)
    return resolution_grid(2 * n, np.concatenate([pts, -1 + e, 1 - e]), per_theta=4)


def spline_minus_interpolant(S: PiecewisePolynomial, x):
    """``S - S_1`` from local coefficients, exact where the pieces are linear."""
    p = S.partition
    j = p.interval_index(x)
    t = (x - S.center[j - 1]) / S.half[j - 1]
    out = np.zeros_like(x)
    for m in range(2, S.order):
        out += S.coeffs[j - 1, m] * (t**m - (t if m % 2 else 1.0))
    return out


def small_error(S: PiecewisePolynomial, res: SmallResult, x):
    """``S - P`` on a sorted grid, with the kernel part evaluated from its tails."""
    n = S.n
    p = S.partition
    pk = pair_kernels(n, res.params)
    prof = CombinationProfile(pk, res.jumps, None, x)
    xk = p.knots[1:n]
    a = res.jumps
    below = x <= 0.0
    # sum a_j (p_j - Phi_j), using the form without cancellation on each side
    left_part = prof.left2 - np.sum(a[None, :] * np.clip(x[:, None] - xk[None, :], 0, None), axis=1)
    right_part = prof.right2 + np.sum(a[None, :] * np.clip(x[:, None] - xk[None, :], None, 0), axis=1)
    kernel_err = np.where(below, left_part, right_part)
    return spline_minus_interpolant(S, x) - kernel_err


def small_error_ratio(S, res: SmallResult, phi, alpha, x=None):
    """``sup |S - P| / (delta^alpha phi(rho))`` and the number of skipped points."""
    p = S.partition
    x = error_grid(S.n) if x is None else x
    err = small_error(S, res, x)
    den = p.delta(x) ** alpha * phi(p.rho(x))
    ok = den > 1e-300
    return float(np.max(np.abs(err[ok]) / den[ok])), int(np.sum(~ok))
