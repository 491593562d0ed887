"""Convex piecewise polynomial approximation of a convex function on a Chebyshev partition.

The fitted spline has degree ``r + 1``.  Interior pieces are Hermite-Birkhoff
interpolants (values and slopes at both knots, plus ``r - 2`` interior
values), so the result is automatically C^1.  On ``I_1 u I_2`` and on
``I_{n-1} u I_n`` the spline is a single polynomial: the order-``r`` Taylor
polynomial of ``f`` at the endpoint plus a multiple of ``(x -+ 1)^(r+1)``.
When some piece is not convex, slopes and interior values are re-chosen by a
linear program that keeps the knot values and forces nonnegative Bernstein
coefficients of every second derivative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
from scipy.optimize import linprog

from .partition import build_partition
from .piecewise import PiecewisePolynomial, _horner


class NonConvexError(ValueError):
    """The input function is not convex; ``triple`` witnesses it."""

    def __init__(self, triple, value):
        super().__init__(f"second difference {value:.3e} < 0 at points {triple}")
        self.triple = triple
        self.value = value


class SplineError(RuntimeError):
    pass


def convexity_witness(f, grid_size=4001, tol=1e-9):
    """Return ``((x - u, x, x + u), value)`` with a negative second difference, or None.

    Divided differences are compared against ``-tol * scale`` plus the
    rounding noise of the samples.
    """
    xs = np.concatenate([np.linspace(-1, 1, grid_size), np.cos(np.linspace(0, np.pi, grid_size))])
    xs = np.unique(np.round(xs, 13))
    v = np.asarray(f(xs), dtype=float)
    scale = max(float(np.max(np.abs(v))), 1e-300)
    for step in (1, 7, 61, 400):
        if 2 * step >= xs.size:
            break
        a, b, c = xs[: -2 * step], xs[step:-step], xs[2 * step:]
        fa, fb, fc = v[: -2 * step], v[step:-step], v[2 * step:]
        dd = (fc - fb) / (c - b) - (fb - fa) / (b - a)
        noise = 1e-13 * scale * (1 / (b - a) + 1 / (c - b))
        bad = dd < -(tol * scale + noise)
        if np.any(bad):
            worst = int(np.argmin(np.where(bad, dd, np.inf)))
            return (float(a[worst]), float(b[worst]), float(c[worst])), float(dd[worst])
    return None


# --------------------------------------------------------------------------
# local Hermite-Birkhoff pieces


def _interior_nodes(r):
    m = r - 2
    if m <= 0:
        return np.zeros(0)
    return np.cos(np.pi * np.arange(1, m + 1) / (m + 1))


@dataclass(frozen=True)
class _HermiteBasis:
    """Inverse of the local collocation system for degree ``r + 1`` pieces.

    Data order: value(-1), dvalue/dt(-1), value(+1), dvalue/dt(+1), interior values.
    """

    r: int
    inverse: np.ndarray
    nodes: np.ndarray


def _hermite_basis(r):
    k = r + 2
    nodes = _interior_nodes(r)
    rows = []
    pw = np.arange(k)
    rows.append((-1.0) ** pw)
    rows.append(np.where(pw > 0, pw * (-1.0) ** (pw - 1), 0.0))
    rows.append(np.ones(k))
    rows.append(pw.astype(float))
    for t in nodes:
        rows.append(t**pw)
    M = np.array(rows)
    return _HermiteBasis(r, np.linalg.inv(M), nodes)


def _bernstein_of_second_derivative(k):
    """Matrix mapping ascending local power coefficients (order k) to Bernstein
    coefficients of the second t-derivative on t in [-1, 1]."""
    deg = k - 3  # degree of p''
    if deg < 0:
        return np.zeros((1, k))
    # second derivative coefficient map
    D2 = np.zeros((deg + 1, k))
    for m in range(2, k):
        D2[m - 2, m] = m * (m - 1)
    # t = 2u - 1 with u in [0, 1]: power basis in t -> power basis in u
    T = np.zeros((deg + 1, deg + 1))
    for m in range(deg + 1):
        for i in range(m + 1):
            T[i, m] = comb(m, i) * 2.0**i * (-1.0) ** (m - i)
    # power basis in u -> Bernstein: b_i = sum_{l <= i} C(i,l)/C(deg,l) a_l
    B = np.zeros((deg + 1, deg + 1))
    for i in range(deg + 1):
        for l in range(i + 1):
            B[i, l] = comb(i, l) / comb(deg, l)
    return B @ T @ D2


@dataclass
class SplineFit:
    """Result of :func:`fit_convex_spline`."""

    spline: PiecewisePolynomial
    r: int
    a_plus: float | None
    a_minus: float | None
    taylor_plus: bool
    taylor_minus: bool
    lp_used: bool = False
    notes: list = field(default_factory=list)


def _taylor_piece_rows(f, r, p, side, match_point):
    """Local rows on the two end intervals for the Taylor form plus ``a (x -+ 1)^(r+1)``."""
    e = 1.0 if side > 0 else -1.0
    ders = [float(f.derivative(m)(e)) for m in range(r + 1)]
    taylor = np.array([ders[m] / factorial(m) for m in range(r + 1)])
    y = match_point - e
    base = float(np.polyval(taylor[::-1], y))
    a = (float(f(match_point)) - base) / y ** (r + 1)
    coef = np.concatenate([taylor, [a]])  # ascending powers of (x - e)
    idx = (1, 2) if side > 0 else (p.n - 1, p.n)
    rows = {}
    for j in idx:
        c, s = 0.5 * (p.knots[j] + p.knots[j - 1]), 0.5 * p.h[j - 1]
        q = np.polynomial.Polynomial(coef)(np.polynomial.Polynomial([c - e, s]))
        row = np.zeros(r + 2)
        row[: q.coef.size] = q.coef[: r + 2]
        rows[j] = row
    return rows, a


def fit_convex_spline(f, r, n, check_input=True, allow_lp=True):
    """Convex C^1 spline of degree ``r + 1`` on the Chebyshev partition ``T_n``.

    Parameters
    ----------
    f : EvaluableFunction
        Convex, with at least ``r`` derivatives.
    r : int
        At least 2.
    n : int
        Number of intervals.

    Returns
    -------
    SplineFit

    Raises
    ------
    NonConvexError
        If sampled second differences of ``f`` are negative.
    SplineError
        If no convex spline with the prescribed knot values is found.
    """
    if r < 2:
        raise ValueError("r must be at least 2")
    if check_input:
        w = convexity_witness(f)
        if w is not None:
            raise NonConvexError(*w)
    p = build_partition(n)
    k = r + 2
    basis = _hermite_basis(r)
    knots = p.knots
    vals = np.asarray(f(knots), dtype=float)
    slopes = np.asarray(f.derivative(1)(knots), dtype=float)
    rows = np.zeros((n, k))
    fixed = np.zeros(n, dtype=bool)
    notes = []
    taylor_plus = taylor_minus = n >= 4
    a_plus = a_minus = None
    if taylor_plus:
        tp, a_plus = _taylor_piece_rows(f, r, p, +1, knots[2])
        tm, a_minus = _taylor_piece_rows(f, r, p, -1, knots[n - 2])
        if n == 4:
            # both end pieces meet at x_2 = 0; the slopes generally disagree there
            notes.append("n=4: end pieces meet at the centre, C1 repair needed")
        for j, row in {**tp, **tm}.items():
            rows[j - 1] = row
            fixed[j - 1] = True
        # slopes/values at x_2 and x_{n-2} taken from the end pieces
        s2 = 0.5 * p.h[2 - 1]
        slopes[2] = float(np.polynomial.Polynomial(rows[1]).deriv()(-1.0)) / s2
        vals[2] = float(_horner(rows[1], -1.0))
        sm = 0.5 * p.h[n - 2]
        slopes[n - 2] = float(np.polynomial.Polynomial(rows[n - 2]).deriv()(1.0)) / sm
        vals[n - 2] = float(_horner(rows[n - 2], 1.0))
    interior_vals = {}
    for j in range(1, n + 1):
        if fixed[j - 1]:
            continue
        c, s = 0.5 * (knots[j] + knots[j - 1]), 0.5 * p.h[j - 1]
        iv = np.asarray(f(c + s * basis.nodes), dtype=float) if basis.nodes.size else np.zeros(0)
        interior_vals[j] = iv
        data = np.concatenate([[vals[j], s * slopes[j], vals[j - 1], s * slopes[j - 1]], iv])
        rows[j - 1] = basis.inverse @ data
    S = PiecewisePolynomial(p, rows)
    lp_used = False
    if not _pieces_convex(S):
        if not allow_lp:
            raise SplineError("non-convex piece and LP repair disabled")
        free = [j for j in range(1, n + 1) if not fixed[j - 1]]
        ends_ok = all(_piece_convex(S, j) for j in range(1, n + 1) if fixed[j - 1])
        if not ends_ok:
            # the Taylor end form cannot be convex at this n: fit the ends like the interior
            notes.append("endpoint Taylor form not convex at this n; ends fitted as interior pieces")
            return _refit_without_taylor(f, r, n, notes)
        S = _lp_repair(S, f, r, p, basis, vals, slopes, interior_vals, free, fixed)
        lp_used = True
        notes.append("convexity repaired by linear program")
    return SplineFit(S, r, a_plus if taylor_plus else None, a_minus if taylor_minus else None,
                     taylor_plus, taylor_minus, lp_used, notes)


def _refit_without_taylor(f, r, n, notes):
    p = build_partition(n)
    k = r + 2
    basis = _hermite_basis(r)
    knots = p.knots
    vals = np.asarray(f(knots), dtype=float)
    slopes = np.asarray(f.derivative(1)(knots), dtype=float)
    rows = np.zeros((n, k))
    interior_vals = {}
    for j in range(1, n + 1):
        c, s = 0.5 * (knots[j] + knots[j - 1]), 0.5 * p.h[j - 1]
        iv = np.asarray(f(c + s * basis.nodes), dtype=float) if basis.nodes.size else np.zeros(0)
        interior_vals[j] = iv
        data = np.concatenate([[vals[j], s * slopes[j], vals[j - 1], s * slopes[j - 1]], iv])
        rows[j - 1] = basis.inverse @ data
    S = PiecewisePolynomial(p, rows)
    lp = False
    if not _pieces_convex(S):
        fixed = np.zeros(n, dtype=bool)
        S = _lp_repair(S, f, r, p, basis, vals, slopes, interior_vals, list(range(1, n + 1)), fixed,
                       free_end_slopes=True)
        lp = True
        notes.append("convexity repaired by linear program")
    return SplineFit(S, r, None, None, False, False, lp, notes)


def _piece_convex(S, j, tol=1e-12):
    B = _bernstein_of_second_derivative(S.order)
    b = B @ S.coeffs[j - 1]
    scale = max(float(np.max(np.abs(S.coeffs[j - 1][2:]))) if S.order > 2 else 0.0, 1e-300)
    return bool(np.all(b >= -tol * scale) or S.min_second_derivative()[j - 1] >= -tol * scale)


def _pieces_convex(S, tol=1e-12):
    d2 = S.min_second_derivative(per_interval=64)
    scale = np.max(np.abs(S.coeffs[:, 2:]), axis=1) if S.order > 2 else np.zeros(S.n)
    return bool(np.all(d2 >= -tol * np.maximum(scale, 1e-300)))


def _lp_repair(S, f, r, p, basis, vals, slopes, interior_vals, free, fixed, free_end_slopes=False):
    """Re-choose knot slopes and interior values so all free pieces have convex Bernstein form.

    Knot values stay at ``f``.  The objective is the weighted L1 distance of
    slopes and interior values from those of ``f``.
    """
    n = p.n
    k = r + 2
    m_int = max(r - 2, 0)
    # slope variables for knots touching a free piece whose slope is not pinned by an end piece
    slope_knots = sorted({j for jj in free for j in (jj, jj - 1)})
    pinned = set()
    if not free_end_slopes:
        for jj in range(1, n + 1):
            if fixed[jj - 1]:
                pinned.update({jj, jj - 1})
    slope_knots = [j for j in slope_knots if j not in pinned]
    sidx = {j: i for i, j in enumerate(slope_knots)}
    nv_s = len(slope_knots)
    vidx = {}
    for jj in free:
        vidx[jj] = nv_s + m_int * len(vidx)
    nv = nv_s + m_int * len(free)
    Bmat = _bernstein_of_second_derivative(k)
    A_ub, b_ub = [], []
    for jj in free:
        s = 0.5 * p.h[jj - 1]
        # local coeffs = inverse @ data; data = [v_j, s*slope_j, v_{j-1}, s*slope_{j-1}, interior]
        lin = np.zeros((k, nv))
        const = np.zeros(k)
        inv = basis.inverse
        const += inv[:, 0] * vals[jj] + inv[:, 2] * vals[jj - 1]
        for col, knot in ((1, jj), (3, jj - 1)):
            if knot in sidx:
                lin[:, sidx[knot]] += inv[:, col] * s
            else:
                const += inv[:, col] * s * slopes[knot]
        for i in range(m_int):
            lin[:, vidx[jj] + i] += inv[:, 4 + i]
        G = Bmat @ lin
        g0 = Bmat @ const
        scale = max(float(np.max(np.abs(g0))), 1e-300)
        A_ub.append(-G / scale)
        b_ub.append(g0 / scale)
    A_ub = np.vstack(A_ub)
    b_ub = np.concatenate(b_ub)
    # L1 objective via auxiliary variables
    target = np.zeros(nv)
    weight = np.zeros(nv)
    for j, i in sidx.items():
        target[i] = slopes[j]
        hl = p.length(j) if 1 <= j <= n else 0.0
        hr = p.length(j + 1) if j + 1 <= n else 0.0
        weight[i] = max(hl, hr)
    for jj in free:
        for i in range(m_int):
            target[vidx[jj] + i] = interior_vals[jj][i]
            weight[vidx[jj] + i] = 1.0
    # variables: x (nv), e (nv) with |x - target| <= e
    I = np.eye(nv)
    A = np.block([[A_ub, np.zeros((A_ub.shape[0], nv))], [I, -I], [-I, -I]])
    b = np.concatenate([b_ub, target, -target])
    c = np.concatenate([np.zeros(nv), weight])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * (2 * nv), method="highs")
    if res.status != 0:
        raise SplineError(f"convexity repair infeasible: {res.message}")
    x = res.x[:nv]
    rows = S.coeffs.copy()
    for jj in free:
        s = 0.5 * p.h[jj - 1]
        sl_j = x[sidx[jj]] if jj in sidx else slopes[jj]
        sl_j1 = x[sidx[jj - 1]] if (jj - 1) in sidx else slopes[jj - 1]
        iv = x[vidx[jj]: vidx[jj] + m_int]
        data = np.concatenate([[vals[jj], s * sl_j, vals[jj - 1], s * sl_j1], iv])
        rows[jj - 1] = basis.inverse @ data
    out = PiecewisePolynomial(p, rows)
    # clip rounding-level negativity is not done: report instead
    return out


# --------------------------------------------------------------------------
# C^1 repair


def smooth_c1(S: PiecewisePolynomial, tol=1e-9):
    """Convex C^1 version of a convex continuous spline.

    At each interior knot ``x_j`` with slope jump ``J >= 0`` a piecewise
    quadratic bump supported on ``[x_{2j+1}, x_{2j-1}]`` of the doubled
    partition is subtracted; it cancels the jump and keeps values and slopes
    at the window ends, so the result lives on the doubled partition and is
    unchanged near +-1.  A spline that is already C^1 is returned unchanged.
    """
    if S.is_c1(tol):
        return S
    fine = S.refine(2)
    order = max(S.order, 3)
    rows = np.zeros((fine.n, order))
    rows[:, : S.order] = fine.coeffs
    jumps = S.knot_jumps(1)
    q = fine.partition
    for j in range(1, S.n):
        J = jumps[j - 1]
        if J == 0:
            continue
        z = q.knots[2 * j]
        a, b = q.knots[2 * j + 1], q.knots[2 * j - 1]
        d1, d2 = z - a, b - z
        alpha = -J * d2 / (2 * d1 * (d1 + d2))
        beta = -J * d1 / (2 * d2 * (d1 + d2))
        # on [a, z] = fine interval 2j+1: subtract alpha (x - a)^2
        for J_fine, coef, root in ((2 * j + 1, alpha, a), (2 * j, beta, b)):
            c, s = fine.center[J_fine - 1], fine.half[J_fine - 1]
            # (x - root)^2 with x = c + s t
            t0 = c - root
            rows[J_fine - 1, 0] -= coef * t0 * t0
            rows[J_fine - 1, 1] -= coef * 2 * t0 * s
            rows[J_fine - 1, 2] -= coef * s * s
    return PiecewisePolynomial(q, rows)


# --------------------------------------------------------------------------
# endpoint data


@dataclass
class EndpointData:
    """Endpoint constants of the fitted spline.

    ``a_plus``/``a_minus`` are the coefficients of ``(x -+ 1)^(r+1)`` in the end
    pieces, ``i_plus``/``i_minus`` the first nonvanishing derivative orders and
    ``D_plus``/``D_minus`` the derived lower-bound constants.
    """

    a_plus: float
    a_minus: float
    i_plus: int | None
    i_minus: int | None
    D_plus: float
    D_minus: float
    r: int
    lower_bound_plus_ok: bool = True
    lower_bound_minus_ok: bool = True
    coefficient_growth: float = 0.0

    @property
    def d_plus(self):
        return 3.0 ** (2 - self.r) * self.D_plus

    @property
    def d_minus(self):
        return 3.0 ** (2 - self.r) * self.D_minus

    def to_dict(self):
        return {k: getattr(self, k) for k in ("a_plus", "a_minus", "i_plus", "i_minus", "D_plus",
                                              "D_minus", "r", "lower_bound_plus_ok",
                                              "lower_bound_minus_ok", "coefficient_growth")} | {
            "d_plus": self.d_plus, "d_minus": self.d_minus}


def first_nonzero_derivative(f, point, orders, rel_tol=1e-13):
    scale = max(1.0, float(np.max(np.abs(f(np.linspace(-1, 1, 65))))))
    for i in orders:
        v = float(f.derivative(i)(point))
        if abs(v) > rel_tol * scale:
            return i, v
    return None, 0.0


def endpoint_data(f, r, fit: SplineFit, grid_per_interval=64):
    """Endpoint constants and the lower-bound checks for ``S''`` near +-1.

    Raises
    ------
    SplineError
        If the spline does not have the Taylor form on the end intervals.
    """
    if not (fit.taylor_plus and fit.taylor_minus):
        raise SplineError("spline is not of Taylor form on the end intervals")
    S = fit.spline
    p = S.partition
    i_p, v_p = first_nonzero_derivative(f, 1.0, range(2, r + 1))
    i_m, v_m = first_nonzero_derivative(f, -1.0, range(2, r + 1))
    denom = 2.0 * factorial(r)
    D_p = abs(v_p) / denom if i_p is not None else 0.0
    D_m = abs(v_m) / denom if i_m is not None else 0.0
    d2 = S.derivative(2)
    ok_p = ok_m = True
    if D_p > 0:
        x = np.linspace(p.knots[2], 1.0, 4 * grid_per_interval)[1:]
        ok_p = bool(np.all(d2(x) >= D_p * (1 - x) ** (r - 2) * (1 - 1e-12)))
    if D_m > 0:
        x = np.linspace(-1.0, p.knots[p.n - 2], 4 * grid_per_interval)[:-1]
        ok_m = bool(np.all(d2(x) >= D_m * (x + 1) ** (r - 2) * (1 - 1e-12)))
    growth = max(abs(fit.a_plus), abs(fit.a_minus)) / p.n**2
    return EndpointData(fit.a_plus, fit.a_minus, i_p, i_m, D_p, D_m, r, ok_p, ok_m, growth)


def spline_dump(fit: SplineFit, certificate=None):
    return fit.spline.to_dict(certificate=certificate, r=fit.r)
