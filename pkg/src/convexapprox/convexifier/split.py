"""Splitting a convex spline into a small and a big part by masking ``S''``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..piecewise import PiecewisePolynomial
from ..smoothness import b_functional
from .classify import ClassificationReport, mask_second


@dataclass
class SplitResult:
    """``S = S1 + S2 = S3 + S4`` with ``S2, S4`` vanishing to first order at -1."""

    S1: PiecewisePolynomial
    S2: PiecewisePolynomial
    S3: PiecewisePolynomial
    S4: PiecewisePolynomial
    mask_E: np.ndarray
    mask_F: np.ndarray

    def invariants(self, S: PiecewisePolynomial, tol=1e-9):
        """Measured residuals of the splitting identities."""
        x = S.interior_grid(16).ravel()
        scale = max(float(np.max(np.abs(S(x)))), 1.0)
        out = {
            "sum_residual": float(np.max(np.abs(self.S3(x) + self.S4(x) - S(x)))) / scale,
            "sum12_residual": float(np.max(np.abs(self.S1(x) + self.S2(x) - S(x)))) / scale,
            "S4_at_minus1": abs(float(self.S4(-1.0))),
            "S4_slope_at_minus1": abs(self.S4.derivative_at(-1.0, 1)),
        }
        d2 = max(float(np.max(np.abs(S.derivative(2).coeffs))), 1e-300)
        out["min_second"] = min(float(np.min(P.min_second_derivative())) for P in (self.S3, self.S4)) / d2
        s_scale = max(float(np.max(np.abs(S.derivative().values_at_knots()))), 1.0)
        out["c1_defect"] = max(float(np.max(np.abs(P.knot_jumps(1)))) if P.n > 1 else 0.0
                               for P in (self.S1, self.S2, self.S3, self.S4)) / s_scale
        out["ok"] = bool(out["sum_residual"] <= tol and out["sum12_residual"] <= tol
                         and out["S4_at_minus1"] <= tol * scale and out["min_second"] >= -tol
                         and out["c1_defect"] <= tol)
        return out


def split(S: PiecewisePolynomial, report: ClassificationReport) -> SplitResult:
    """Masked double integrals: ``s4 = S''`` on ``F``, ``s2 = S''`` on ``E``."""
    n = S.n
    v0, d0 = float(S(-1.0)), S.derivative_at(-1.0, 1)
    S2 = mask_second(S, report.E)
    S4 = mask_second(S, report.F)
    mE = np.zeros(n, dtype=bool)
    mF = np.zeros(n, dtype=bool)
    mE[np.asarray(report.E, dtype=int) - 1] = True
    mF[np.asarray(report.F, dtype=int) - 1] = True
    # the complements carry the value and slope at -1
    S1 = mask_second(S, np.nonzero(~mE)[0] + 1, v0, d0)
    S3 = mask_second(S, np.nonzero(~mF)[0] + 1, v0, d0)
    return SplitResult(S1, S2, S3, S4, mE, mF)


def split_constants(S, parts: SplitResult, phi, k, per_interval=16):
    """``C5 = sup S3'' rho^2 / phi(rho)`` and ``C6 = ceil(b_k(S4, phi))`` (at least 1)."""
    p = S.partition
    x = S.interior_grid(per_interval)
    d2 = parts.S3.derivative(2)
    vals = np.array([d2.eval_piece(j, x[j - 1]) for j in range(1, S.n + 1)])
    rho = p.rho(x)
    C5 = float(np.max(vals * rho**2 / phi(rho)))
    b4 = b_functional(parts.S4, phi, k).total if parts.mask_F.any() else 0.0
    C6 = max(1, int(np.ceil(b4 - 1e-12)))
    return C5, C6, b4
