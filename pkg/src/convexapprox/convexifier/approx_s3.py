"""Convex polynomial approximation of the small part ``S3``.

When ``S3`` is already linear on both end intervals, :func:`convexify_small`
applies directly.  If ``S3'' = A (1 - x)^(k-3)`` survives on ``I_1`` and the
endpoint constant ``d_+`` vanishes, ``S3`` is replaced beyond ``x_1`` by its
tangent line ``L`` at 1 and a linear connector on ``[x_1, xi]``,
``xi = x_{1,2n}``, and the modified spline is handled on the doubled
partition.  The left end is treated symmetrically.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..kernels import KernelParams
from ..piecewise import PiecewisePolynomial
from .small import SmallResult, convexify_small, small_hypotheses


class NBelowThreshold(RuntimeError):
    """``S3`` is not linear near an end where the endpoint constant is positive."""

    def __init__(self, side):
        self.side = side
        super().__init__(f"n below N*, increase n (S3'' does not vanish on the {side} end interval)")


@dataclass
class S3Approximation:
    small: SmallResult
    spline: PiecewisePolynomial       # the spline handed to convexify_small
    phi_scale: float                  # constant making the small hypotheses hold
    modified: list = field(default_factory=list)
    jump_budget: dict = field(default_factory=dict)
    exponent: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def P(self):
        return self.small.P

    @property
    def second(self):
        return self.small.second


def _end_active(S3, j, tol):
    d2 = S3.derivative(2)
    u = np.linspace(-1, 1, 9)
    vals = d2.eval_piece(j, S3.center[j - 1] + S3.half[j - 1] * u)
    scale = max(float(np.max(np.abs(d2.coeffs))), 1e-300)
    return bool(np.max(np.abs(vals)) > tol * scale)


def linearize_end(S3: PiecewisePolynomial, side):
    """``S~3`` on ``T_{2n}``: tangent at the endpoint plus a connector to ``x_1`` (or ``x_{n-1}``).

    Returns the modified spline and the two slope jumps it creates.
    """
    F = S3.refine(2)
    p = F.partition
    N = p.n
    c = F.coeffs.copy()
    e = 1.0 if side > 0 else -1.0
    val, slope = float(S3(e)), S3.derivative_at(e, 1, side=-side)
    # end piece of T_2n, the connector piece, and the knots involved
    j_end, j_con = (1, 2) if side > 0 else (N, N - 1)
    xi = p.knots[1] if side > 0 else p.knots[N - 1]
    x_far = p.knots[2] if side > 0 else p.knots[N - 2]
    y_far = float(S3(x_far))
    y_xi = val + (xi - e) * slope
    con_slope = (y_xi - y_far) / (xi - x_far)
    # each replaced piece is the line through (x0, a) with slope s
    for j, (a, s, x0) in ((j_end, (val, slope, e)), (j_con, (y_far, con_slope, x_far))):
        row = np.zeros(F.order)
        row[0] = a + s * (F.center[j - 1] - x0)
        row[1] = s * F.half[j - 1]
        c[j - 1] = row
    out = PiecewisePolynomial(p, c)
    # slope jumps at xi and at the old knot (right minus left)
    d_old = S3.derivative_at(x_far, 1, side=-side)
    if side > 0:
        jumps = {"xi": slope - con_slope, "x1": con_slope - d_old}
    else:
        jumps = {"xi": con_slope - slope, "x1": d_old - con_slope}
    return out, jumps


def small_scale(S: PiecewisePolynomial, phi):
    """Smallest ``c >= 0`` such that the curvature and jump hypotheses hold with ``c phi``."""
    rep = small_hypotheses(S, phi, tol=0.0)
    return max(rep["approx21"]["worst"], rep["jumps1"]["worst"], 0.0)


def approx_S3(S3: PiecewisePolynomial, phi, params: KernelParams, d_plus, d_minus, tol=1e-9):
    """Convex polynomial ``r_n`` approximating ``S3``.

    Raises
    ------
    NBelowThreshold
        ``S3`` is curved on an end interval whose endpoint constant is positive.
    """
    n = S3.n
    k = S3.order
    S = S3
    modified, jumps, notes = [], {}, []
    right = n > 1 and _end_active(S3, 1, tol)
    left = n > 1 and _end_active(S3, n, tol)
    if right and d_plus > 0:
        raise NBelowThreshold("right")
    if left and d_minus > 0:
        raise NBelowThreshold("left")
    exponent = params.alpha
    if right or left:
        exponent = min(params.alpha, 2 * k - 2)
        if right:
            S, jr = linearize_end(S3, +1)
            modified.append("right")
            jumps["right"] = jr
        if left:
            base = S3 if not right else None
            if base is None:
                # the right end was already modified on T_2n; mirror on that spline
                S, jl = _linearize_left_refined(S, S3)
            else:
                S, jl = linearize_end(S3, -1)
            modified.append("left")
            jumps["left"] = jl
    scale = small_scale(S, phi)
    if scale <= 0:
        scale = 1.0
    phis = _Scaled(phi, scale * (1 + 1e-9))
    res = convexify_small(S, phis, params, check=True)
    return S3Approximation(res, S, scale, modified, jumps, exponent, notes)


def _linearize_left_refined(F: PiecewisePolynomial, S3: PiecewisePolynomial):
    """Left-end linearization applied to a spline already living on ``T_2n``."""
    p = F.partition
    N = p.n
    c = F.coeffs.copy()
    val, slope = float(S3(-1.0)), S3.derivative_at(-1.0, 1, side=+1)
    xi, x_far = p.knots[N - 1], p.knots[N - 2]
    y_far = float(S3(x_far))
    con_slope = (val + (xi + 1.0) * slope - y_far) / (xi - x_far)
    for j, lin in ((N, (val, slope, -1.0)), (N - 1, (y_far, con_slope, x_far))):
        a, s, x0 = lin
        row = np.zeros(F.order)
        row[0] = a + s * (F.center[j - 1] - x0)
        row[1] = s * F.half[j - 1]
        c[j - 1] = row
    d_old = S3.derivative_at(x_far, 1, side=+1)
    return PiecewisePolynomial(p, c), {"xi": con_slope - slope, "x1": d_old - con_slope}


class _Scaled:
    def __init__(self, phi, c):
        self.phi, self.c = phi, float(c)

    def __call__(self, t):
        return self.c * self.phi(t)


def s3_error_ratio(S3: PiecewisePolynomial, approx: S3Approximation, phi, x=None):
    """``sup |S3 - r_n| / (delta_n^e phi(rho_n))`` with ``e`` the target exponent, on ``T_n``."""
    from .small import error_grid, small_error
    p = S3.partition
    x = error_grid(approx.spline.n) if x is None else x
    err = small_error(approx.spline, approx.small, x) + (S3(x) - approx.spline(x))
    with np.errstate(under="ignore"):
        den = p.delta(x) ** approx.exponent * phi(p.rho(x))
    ok = den > 1e-300
    return float(np.max(np.abs(err[ok]) / den[ok])) if np.any(ok) else 0.0, int(np.sum(~ok))
