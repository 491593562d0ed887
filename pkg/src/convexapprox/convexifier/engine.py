"""The full pipeline: convex spline, splitting, polynomial pieces, certification.

``P = R + r`` where ``r`` approximates the small part ``S3`` and
``R = D + C2 (Qbar + M)`` approximates the big part ``S4``; ``Qbar`` and ``M``
are sums of correcting polynomials over the blocks in ``F`` and over the
windows at the ends of the components of ``F``.  If the certificate fails,
``C2`` is doubled (which moves intervals into UC), and if that does not help
``n`` is doubled.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..kernels import default_params, pair_kernels
from ..poly import Polynomial
from ..smoothness import b_functional, make_majorant_from
from ..splines import SplineError, endpoint_data, fit_convex_spline
from ..verify import check_convexity
from .approx_s3 import NBelowThreshold, approx_S3, s3_error_ratio
from .calibrate import load_constants
from .classify import block_size_for, classify, padded_n
from .correcting import BlockSizeError, check_correcting_Q, correcting_Q
from .simultaneous import check_D, simultaneous_D
from .small import SmallHypothesisError
from .split import split, split_constants

log = logging.getLogger(__name__)


class PipelineFailure(RuntimeError):
    """No certified approximant within the escalation limits."""

    def __init__(self, message, attempts):
        self.attempts = attempts
        super().__init__(message)


@dataclass
class ConvexApproximant:
    P: Polynomial
    second: Polynomial
    n: int
    r: int
    certificates: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)

    @property
    def degree(self):
        return self.P.degree

    def __call__(self, x):
        return self.P(x)

    def to_dict(self):
        return {"n": self.n, "r": self.r, "polynomial": self.P.to_dict(),
                "certificates": self.certificates, "constants_used": self.constants,
                "report": self.report}


@dataclass
class _Attempt:
    n: int
    C2: float
    outcome: str
    detail: dict = field(default_factory=dict)


def region_masks(report, x):
    """Masks of ``F \\ J*``, ``J*`` and the complement of ``F^e`` on the points ``x``."""
    from ..partition import build_partition
    from .blocks import in_intervals
    p = build_partition(report.n)
    inF = in_intervals(p, report.F, x)
    Fe = set()
    for j in report.F:
        Fe |= {max(1, j - 1), j, min(report.n, j + 1)}
    inFe = in_intervals(p, sorted(Fe), x)
    inJs = in_intervals(p, report.J_star, x)
    return inF & ~inJs, inJs, ~inFe


def assemble(f, r, n, alpha=None, C2=None, tol=1e-9, n_cap=None, c2_steps=6,
             check_q=True, fid=""):
    """Certified convex polynomial approximant of ``f``.

    Parameters
    ----------
    f : EvaluableFunction
        Convex, with at least ``r + 2`` derivatives.
    r : int
        At least 2.
    n : int
        Partition size (rounded up to a multiple of the block size).
    alpha : float, optional
        Exponent of the endpoint factor; defaults to ``2r + 2``.
    C2 : float, optional
        Starting threshold constant; the calibrated value by default.
    n_cap : int, optional
        Largest partition tried when escalating (default ``8 n``).
    c2_steps : int
        Doublings of ``C2`` tried at each ``n``.

    Raises
    ------
    PipelineFailure
        With the list of attempts and the worst-point diagnostic.
    """
    if r < 2:
        raise ValueError("r must be at least 2")
    k = r + 2
    alpha = 2 * r + 2 if alpha is None else alpha
    consts = load_constants(k)
    C3 = block_size_for(k)
    n_cur = padded_n(n, C3)
    n_cap = n_cap or 8 * n_cur
    params = default_params(alpha=alpha, k=k)
    phi0 = make_majorant_from(f, r)
    attempts = []
    while n_cur <= n_cap:
        c2 = float(C2 if C2 is not None else consts["C2"])
        for _ in range(c2_steps + 1):
            t0 = time.time()
            try:
                out = _attempt(f, r, n_cur, c2, params, phi0, consts, tol, check_q)
            except NBelowThreshold as exc:
                attempts.append(_Attempt(n_cur, c2, "n below N*", {"side": exc.side}))
                break
            except (SmallHypothesisError, BlockSizeError, SplineError) as exc:
                attempts.append(_Attempt(n_cur, c2, type(exc).__name__, {"message": str(exc)}))
                c2 *= 2.0
                continue
            cert = out.certificates["convexity"]
            attempts.append(_Attempt(n_cur, c2, "pass" if cert["passed"] else "not convex",
                                     {"min": cert["min_value"], "argmin": cert["argmin"],
                                      "seconds": time.time() - t0}))
            if cert["passed"]:
                out.report["attempts"] = [a.__dict__ for a in attempts]
                out.report["N_detected"] = n_cur
                out.report["n_requested"] = int(n)
                return out
            c2 *= 2.0
        n_cur *= 2
    worst = [a.__dict__ for a in attempts]
    raise PipelineFailure(f"no certified approximant up to n={n_cap} for {fid or 'f'}", worst)


def _attempt(f, r, n, C2, params, phi0, consts, tol, check_q):
    k = r + 2
    fit = fit_convex_spline(f, r, n)
    S = fit.spline
    ep = endpoint_data(f, r, fit)
    b = b_functional(S, phi0, k).total
    phi = phi0.rescaled(max(1.0, b))
    rep = classify(S, phi, C2, k, block_size_for(k))
    parts = split(S, rep)
    inv = parts.invariants(S)
    C5, C6, b4 = split_constants(S, parts, phi, k)
    s3 = approx_S3(parts.S3, phi, params, ep.d_plus, ep.d_minus)
    refine = min(C6, 2)
    D = simultaneous_D(parts.S4, params, refine, one_sided=True)
    # correcting polynomials, all summed into one kernel combination
    qs = []
    kappa = consts["kappa"]
    for q in rep.F_blocks:
        qs.append(("Qbar", correcting_Q(n, rep.block(q), rep.J_q[q], phi, params, kappa)))
    for pidx in rep.F_plus:
        qs.append(("M+", correcting_Q(n, rep.F_plus[pidx], rep.J_plus[pidx], phi, params, kappa)))
        qs.append(("M-", correcting_Q(n, rep.F_minus[pidx], rep.J_minus[pidx], phi, params, kappa)))
    R = D.D
    R2 = D.second
    q_checks = []
    if qs:
        a_p = C2 * sum(Q.a_p for _, Q in qs)
        a_pt = C2 * sum(Q.a_pt for _, Q in qs)
        pk = pair_kernels(n, params)
        R = R + pk.combination(a_p, a_pt)
        from .small import _mixture_second
        R2 = R2 + _mixture_second(pk, a_p, a_pt)
        if check_q:
            for name, Q in qs:
                c = check_correcting_Q(Q, phi, k)
                q_checks.append({"kind": name, "E": list(Q.E), "J": Q.J, "flags": Q.flags,
                                 **c.to_dict(),
                                 "passes": c.passes(consts["C1"], consts["C_Qu2"])})
    P = R + s3.P
    P2 = R2 + s3.second
    # exact endpoint interpolation: add the linear interpolant of f - P at +-1
    fe = f(np.array([-1.0, 1.0]))
    e_m, e_p = float(fe[0] - P(-1.0)), float(fe[1] - P(1.0))
    P = P + Polynomial.linear(e_m, 0.5 * (e_p - e_m))
    cert = check_convexity(P, tol, second=P2)
    # the three appendix regions, measured on R'' alone
    from .correcting import check_grid
    x = check_grid(n)
    regions = {}
    for name, mask in zip(("F_minus_Jstar", "Jstar", "outside_Fe"), region_masks(rep, x)):
        vals = R2(x[mask]) if np.any(mask) else np.array([0.0])
        regions[name] = {"min": float(np.min(vals)), "points": int(np.sum(mask)),
                         "ok": bool(np.min(vals) >= -tol * max(cert.max_abs, 1e-300))}
    windows = {"all": (1, n)}
    for pidx, (lo, hi) in enumerate(rep.F_components):
        windows[f"F{pidx}"] = (lo, hi)
    dcheck = check_D(parts.S4, D, phi, params.alpha, windows) if rep.F else None
    s3_ratio = s3_error_ratio(parts.S3, s3, phi)[0]
    constants = {
        "kappa": kappa, "C1": consts["C1"], "C2": C2, "C3": rep.C3, "C4": rep.C4,
        "C5": C5, "C6": C6, "C_Qu2": consts["C_Qu2"], "xi": params.xi, "mu": params.mu,
        "alpha": params.alpha, "beta": params.beta, "phi_rescale": max(1.0, b), "b_k_S": b,
        "b_k_S4": b4, "n1": D.n1, "small_scale": s3.phi_scale,
    }
    certificates = {
        "convexity": cert.to_dict(),
        "convexity_min": cert.min_value,
        "endpoint_residuals": [abs(float(fe[0] - P(-1.0))), abs(float(fe[1] - P(1.0)))],
        "cases": regions,
        "split_invariants": inv,
        "D_contract": dcheck.to_dict() if dcheck else None,
        "S3_ratio": s3_ratio,
        "Q_checks": q_checks,
    }
    report = {"classification": rep.to_dict(), "endpoint": ep.to_dict(),
              "S3_modified": s3.modified, "S3_jumps": s3.jump_budget,
              "spline_notes": fit.notes, "degree": P.degree}
    return ConvexApproximant(P, P2, n, r, certificates, constants, report)
