"""Certificates and measurements for polynomial approximants.

* :func:`check_convexity` samples ``P''`` on a fine Chebyshev grid and refines
  the smallest values with a golden-section search.
* :func:`error_profile` measures the pointwise bounds of the main estimate
  with the ``0/0`` convention (points with a vanishing bound are skipped).
* :func:`oracle_best_convex` solves the discretized best convex interpolatory
  approximation problem by a cutting-plane loop on a linear program.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import linprog, minimize_scalar

from .partition import build_partition
from .poly import Polynomial, cgl_points
from .smoothness import finite_difference

SKIP_BELOW = 1e-300
# bounds below this multiple of eps * max|f| cannot be resolved by |f - P|
RESOLUTION_FACTOR = 16.0


@dataclass
class ConvexityCertificate:
    min_value: float
    argmin: float
    max_abs: float
    tol: float
    grid_size: int

    @property
    def passed(self):
        return bool(self.min_value >= -self.tol * self.max_abs)

    def to_dict(self):
        return {"min_value": self.min_value, "argmin": self.argmin, "max_abs": self.max_abs,
                "tol": self.tol, "grid_size": self.grid_size, "passed": self.passed}


def check_convexity(P: Polynomial, tol=1e-9, second: Polynomial | None = None, refine=3):
    """Certify ``P'' >= -tol * max|P''|`` on ``[-1, 1]``.

    Parameters
    ----------
    P : Polynomial
    tol : float
    second : Polynomial, optional
        ``P''`` computed independently (avoids differentiating a long series).
    refine : int
        Number of smallest grid values refined by golden-section search.

    Examples
    --------
    >>> check_convexity(Polynomial.from_power_coeffs([0, 0, 1])).min_value
    2.0
    >>> check_convexity(Polynomial.from_power_coeffs([0, 0, 0, 1])).passed
    False
    """
    d2 = P.derivative(2) if second is None else second
    D = max(4 * max(P.degree, d2.degree), 8)
    x = cgl_points(D)
    v = d2.cgl_values(D)
    i_min = int(np.argmin(v))
    best_v, best_x = float(v[i_min]), float(x[i_min])
    for i in np.argsort(v)[:refine]:
        a, b = x[min(i + 1, D)], x[max(i - 1, 0)]
        if b <= a:
            continue
        res = minimize_scalar(lambda t: float(d2(t)), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, b - a)})
        if res.fun < best_v:
            best_v, best_x = float(res.fun), float(res.x)
    return ConvexityCertificate(best_v, best_x, float(np.max(np.abs(v))), tol, D + 1)


# --------------------------------------------------------------------------
# error profile


@dataclass
class BoundRow:
    fid: str
    r: int
    n: int
    ratio_1_5: float
    ratio_1_6: float
    ratio_1_7: float
    ratio_est2: float
    convexity_min: float
    endpoint_resid: float
    N_detected: int | None
    skipped: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    CSV_COLUMNS = ("f_id", "r", "n", "ratio_1_5", "ratio_1_6", "ratio_1_7", "ratio_est2",
                   "convexity_min", "endpoint_resid", "N_detected")

    def csv_row(self):
        vals = [self.fid, self.r, self.n, self.ratio_1_5, self.ratio_1_6, self.ratio_1_7,
                self.ratio_est2, self.convexity_min, self.endpoint_resid,
                "" if self.N_detected is None else self.N_detected]
        return [v if isinstance(v, (str, int)) else f"{v:.10e}" for v in vals]


def profile_grid(n, per_interval=32, end_points=40):
    """Interior points of every interval of ``T_n`` plus points clustering at +-1."""
    p = build_partition(n)
    u = np.linspace(-1, 1, per_interval + 2)[1:-1]
    pts = (p.midpoints()[:, None] + 0.5 * p.h[:, None] * u[None, :]).ravel()
    e = np.geomspace(1e-15, 0.5 * p.h[0], end_points)
    return np.unique(np.concatenate([pts, -1 + e, 1 - e, [-1.0, 1.0]]))


class ModulusTable:
    """``omega_k(g, t)`` for ``k`` in {1, 2}, tabulated for ``t >= t0`` and extended by ``t^k`` below.

    Below ``t0`` the finite differences lose all accuracy to rounding, while
    for smooth ``g`` the modulus behaves like ``t^k`` there.
    """

    def __init__(self, g, k, t0=1e-4, points=96, x_points=4096):
        self.k, self.t0 = int(k), float(t0)
        self.ts = np.geomspace(t0, 2.0 / k, points)
        vals = np.empty(points)
        for i, u in enumerate(self.ts):
            xs = np.linspace(-1 + 0.5 * k * u, 1 - 0.5 * k * u, x_points)
            vals[i] = float(np.max(np.abs(finite_difference(g, k, u, xs))))
        self.vals = np.maximum.accumulate(vals)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.clip(t, 1e-300, self.ts[-1])
        if np.all(self.vals > 0):
            # power-law interpolation, exact for omega ~ t^a
            inner = np.exp(np.interp(np.log(tt), np.log(self.ts), np.log(self.vals)))
        else:
            inner = np.interp(np.log(tt), np.log(self.ts), self.vals)
        below = self.vals[0] * (tt / self.t0) ** self.k
        return np.where(t <= 0, 0.0, np.where(tt < self.t0, below, inner))


def error_profile(f, P: Polynomial, r, n, x=None, fid="", convexity_min=np.nan, N=None,
                  constants=None):
    """Sup ratios of ``|f - P|`` against the pointwise bounds of the main estimate.

    With ``phi(x) = sqrt(1 - x^2)``:

    * ``ratio_1_5``: ``|f - P| / ((phi/n)^r omega_2(f^(r), phi/n))`` on ``[-1, 1]``;
    * ``ratio_1_6``: ``|f - P| / (phi^(2r) omega_2(f^(r), phi/n))`` within ``n^-2`` of +-1;
    * ``ratio_1_7``: ``|f - P| / (phi^(2r) omega_1(f^(r), phi^2))`` within ``n^-2`` of +-1;
    * ``ratio_est2``: ``n^r sup |f - P| / phi^r`` divided by ``||f^(r)||``.

    Points where a bound is below ``1e-300`` are skipped and counted, and so
    are points where it is below the rounding level ``16 eps max|f|`` of the
    computed error (counted separately under ``"<key>_unresolved"``).  Errors
    at or below that level are treated as zero.
    """
    x = profile_grid(n) if x is None else np.asarray(x, dtype=float)
    err = np.abs(f(x) - P(x))
    xs = np.linspace(-1, 1, 2049)
    floor = RESOLUTION_FACTOR * np.finfo(float).eps * max(float(np.max(np.abs(f(xs)))), 1e-300)
    # errors at the rounding level are indistinguishable from zero
    err = np.where(err <= floor, 0.0, err)
    phi = np.sqrt(np.clip(1 - x**2, 0, None))
    g = f.derivative(r)
    w2, w1 = ModulusTable(g, 2), ModulusTable(g, 1)
    skipped = {}

    def sup_ratio(num, den, mask, key, unit=1.0):
        live = mask & (den > SKIP_BELOW)
        skipped[key] = int(np.sum(mask & ~live))
        resolved = live & (den * unit > floor)
        skipped[key + "_unresolved"] = int(np.sum(live & ~resolved))
        live = resolved
        return float(np.max(num[live] / den[live])) if np.any(live) else 0.0

    everywhere = np.ones_like(x, dtype=bool)
    ends = (x <= -1 + n**-2.0) | (x >= 1 - n**-2.0)
    with np.errstate(under="ignore"):
        r15 = sup_ratio(err, (phi / n) ** r * w2(phi / n), everywhere, "1_5")
        r16 = sup_ratio(err, phi ** (2 * r) * w2(phi / n), ends, "1_6")
        r17 = sup_ratio(err, phi ** (2 * r) * w1(phi**2), ends, "1_7")
    norm_r = max(float(np.max(np.abs(g(xs)))), 1e-300)
    with np.errstate(under="ignore"):
        rest = sup_ratio(err * float(n) ** r, phi**r * norm_r, everywhere, "est2",
                         unit=float(n) ** -r)
    fe = f(np.array([-1.0, 1.0]))
    resid = float(max(abs(fe[0] - P(-1.0)), abs(fe[1] - P(1.0))))
    scale = max(float(np.max(np.abs(f(xs)))), 1.0)
    return BoundRow(fid, int(r), int(n), r15, r16, r17, rest, float(convexity_min),
                    resid / scale, N, skipped, dict(constants or {}))


# --------------------------------------------------------------------------
# discretized best convex approximation


@dataclass
class OracleResult:
    error: float
    coeffs: np.ndarray
    iterations: int
    converged: bool
    active_constraints: int

    @property
    def polynomial(self):
        return Polynomial(self.coeffs)


def _cheb_rows(x, degree, der=0):
    V = C.chebvander(x, degree)
    if der == 0:
        return V
    out = np.empty_like(V)
    for i in range(degree + 1):
        e = np.zeros(degree + 1)
        e[i] = 1.0
        out[:, i] = C.chebval(x, C.chebder(e, der)) if i >= der else 0.0
    return out


def oracle_best_convex(f, n, grid_m=400, max_iter=60, tol=1e-12):
    """Discretized ``min ||f - P||`` over ``deg P <= n`` with ``P'' >= 0`` on ``grid_m`` points and ``P(+-1) = f(+-1)``.

    Error samples start from a coarse set and are extended by the worst
    point of the current solution (exchange / cutting-plane loop) until the
    sampled maximum on the full grid matches the LP value.

    Returns
    -------
    OracleResult
        ``error`` is the optimum on the discretization, a lower envelope for
        what a convex interpolatory polynomial of degree ``n`` can reach on
        that grid.
    """
    D = int(n)
    y = cgl_points(grid_m - 1)
    fy = f(y)
    A2 = _cheb_rows(y, D, 2)
    ends = np.array([-1.0, 1.0])
    A_eq = np.hstack([C.chebvander(ends, D), np.zeros((2, 1))])
    b_eq = f(ends)
    active = list(np.linspace(0, grid_m - 1, min(grid_m, 4 * D + 8)).astype(int))
    V = C.chebvander(y, D)
    c = np.zeros(D + 2)
    c[-1] = 1.0
    best = None
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        Va = V[active]
        # f - P <= t and P - f <= t on active points; -P'' <= 0 on the whole grid
        A_ub = np.vstack([np.hstack([-Va, -np.ones((len(active), 1))]),
                          np.hstack([Va, -np.ones((len(active), 1))]),
                          np.hstack([-A2, np.zeros((grid_m, 1))])])
        b_ub = np.concatenate([-fy[active], fy[active], np.zeros(grid_m)])
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=[(None, None)] * (D + 1) + [(0, None)], method="highs")
        if res.status != 0:
            break
        coef, t = res.x[:-1], res.x[-1]
        err = np.abs(V @ coef - fy)
        best = (float(np.max(err)), coef)
        worst = int(np.argmax(err))
        if err[worst] <= t + tol * max(1.0, t):
            converged = True
            break
        active.append(worst)
    if best is None:
        raise RuntimeError("linear program failed")
    return OracleResult(best[0], best[1], it, converged, len(active))
