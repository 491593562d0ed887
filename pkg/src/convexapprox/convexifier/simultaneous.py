"""Simultaneous polynomial approximation of a C1 spline and its second derivative.

``S`` is written as its left-most piece plus ``sum_j sum_m c_{j,m} (x - x_j)_+^m``
(``m = 2..k-1``; no ``m = 1`` terms since ``S`` is C1).  Each truncated power is
replaced by ``T_{j,m}(x) = int_{-1}^x (x - t)^m rho_{j,m}(t) dt`` where
``rho_{j,m}`` mixes ``m + 1`` neighbouring kernels of a refined bank with
weights fixed by the moments ``E[T^i] = x_j^i``, ``i <= m``.  Those moments make
``T_{j,m} - (x - x_j)^m`` vanish identically to the right of the kernels, which
is the normalization at +1 that the ramps ``q_j`` use for ``m = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from ..kernel_checks import resolution_grid, tail_integrals
from ..kernels import KernelParams, kernel_bank
from ..partition import build_partition
from ..piecewise import PiecewisePolynomial
from ..poly import Polynomial
from ..smoothness import b_functional


class ContractError(RuntimeError):
    """A measured contract constant exceeds the allowed value."""


def kernel_window(J, m, n1, side=0):
    """Bank indices of the ``m + 1`` kernels used for the knot with bank index ``J``.

    ``side=0`` centres the window on the knot; ``side=+1`` keeps it on the
    intervals right of ``x_J`` (indices ``J, J-1, ...``) and ``side=-1`` on
    the left (``J+1, J+2, ...``).
    """
    if side > 0:
        start = J - m
    elif side < 0:
        start = J + 1
    else:
        start = J - (m + 1) // 2 + 1
    start = min(max(start, 1), n1 - m)
    return np.arange(start, start + m + 1)


def truncated_power_weights(bank, J, m, side=0):
    """Weights ``w`` over :func:`kernel_window` with ``sum w E_l[(1-T)^i] = (1 - x_J)^i``, ``i <= m``.

    The solution is necessarily signed for ``m >= 2`` (the variance must vanish).
    """
    idx = kernel_window(J, m, bank.n, side)
    M = bank.moments[idx - 1, : m + 1].T
    rhs = (1.0 - bank.partition.knots[J]) ** np.arange(m + 1)
    s = np.max(np.abs(M), axis=1)
    w = np.linalg.solve(M / s[:, None], rhs / s)
    return idx, w


def window_sides(S: PiecewisePolynomial, tol=0.0):
    """Side per interior knot: towards the curved piece when the other one is linear, else centred."""
    d2 = S.derivative(2).coeffs
    flat = np.all(np.abs(d2) <= tol * max(float(np.max(np.abs(d2))), 1e-300), axis=1)
    sides = np.zeros(S.n - 1, dtype=int)
    for j in range(1, S.n):
        right_flat, left_flat = flat[j - 1], flat[j]
        if left_flat and not right_flat:
            sides[j - 1] = 1
        elif right_flat and not left_flat:
            sides[j - 1] = -1
    return sides


@dataclass
class SimultaneousD:
    """``D`` with its second derivative kept as a separate series.

    ``orders[m]`` is the bank weight vector of ``sum_j c_{j,m} rho_{j,m}``, so
    that ``D = base + sum_m m! int^(m+1) orders[m]``; ``coeffs[m]`` are the
    truncated-power coefficients ``c_{j,m}`` of the spline.
    """

    D: Polynomial
    second: Polynomial
    n: int
    n1: int
    params: KernelParams
    coeffs: dict
    orders: dict
    base: Polynomial
    sides: np.ndarray | None = None
    notes: list = field(default_factory=list)

    @property
    def degree(self):
        return self.D.degree


def simultaneous_D(S: PiecewisePolynomial, params: KernelParams, refine=2, one_sided=True):
    """Build ``D_{n1}(., S)`` with ``n1 = refine * n``.

    Parameters
    ----------
    S : PiecewisePolynomial
        C1 spline on ``T_n``.
    params : KernelParams
        Only ``xi`` and ``mu`` are used.
    refine : int
        Ratio ``n1 / n``.
    one_sided : bool
        At a knot where one neighbouring piece is linear, put the kernels on
        the curved side, so the overshoot of the signed mixture lands where
        ``S''`` is large.
    """
    n = S.n
    n1 = int(refine) * n
    base = S.piece_as_polynomial(n)
    D, second = base, base.derivative(2)
    coeffs, orders = {}, {}
    if n == 1 or S.order <= 2:
        return SimultaneousD(D, second, n, n1, params, coeffs, orders, base)
    bank = kernel_bank(n1, 0, 0, params.xi, params.mu)
    sides = window_sides(S) if one_sided else np.zeros(n - 1, dtype=int)
    for m in range(2, S.order):
        c = S.knot_jumps(m) / factorial(m)
        W = np.zeros(n1)
        for j in np.nonzero(c)[0] + 1:
            idx, w = truncated_power_weights(bank, refine * j, m, sides[j - 1])
            W[idx - 1] += c[j - 1] * w
        coeffs[m] = c
        if not np.any(W):
            continue
        orders[m] = W
        dens = Polynomial.from_samples(bank.mixture_density(W))
        g = dens
        for i in range(m + 1):
            g = g.antiderivative(0.0)
            if i == m - 2:
                second = second + g.scale(float(factorial(m)))
        D = D + g.scale(float(factorial(m)))
    return SimultaneousD(D, second, n, n1, params, coeffs, orders, base, sides)


def deviation(S: PiecewisePolynomial, res: SimultaneousD, x, order=0):
    """``S^(order) - D^(order)`` (``order`` 0 or 2) from the kernel tails.

    ``x`` must be sorted and cover ``[-1, 1]``.  The polynomial parts of the
    smoothed powers cancel identically against the truncated powers, so the
    difference is assembled from tail integrals only: the left form for
    ``x <= 0`` and the right form for ``x > 0``.
    """
    x = np.asarray(x, dtype=float)
    knots = build_partition(S.n).knots[1:-1]
    out = np.zeros_like(x)
    if not res.orders:
        return out
    bank = kernel_bank(res.n1, 0, 0, res.params.xi, res.params.mu)
    below = x <= 0.0
    diff = x[:, None] - knots[None, :]
    # truncated powers of the spline: passed knots (left form) and knots ahead (right form)
    for m, c in res.coeffs.items():
        e = m - order
        fac = factorial(m) / factorial(e)
        pos = np.sum(c[None, :] * np.where(diff > 0, diff, 0.0) ** e * (diff > 0), axis=1)
        neg = np.sum(c[None, :] * np.where(diff < 0, diff, 0.0) ** e * (diff < 0), axis=1)
        out += fac * np.where(below, pos, -neg)
    for l, W in res.orders.items():
        e = l - order
        wd = {i + 1: W[i] for i in np.nonzero(W)[0]}
        left, right = tail_integrals(bank, wd, x, e)
        fac = factorial(l) / factorial(e)
        out -= fac * np.where(below, left[e], -(-1.0) ** e * right[e])
    return out


def contract_grid(n, per_interval=16):
    p = build_partition(n)
    u = np.linspace(-1 + 1 / 64, 1 - 1 / 64, per_interval)
    pts = (p.midpoints()[:, None] + 0.5 * p.h[:, None] * u[None, :]).ravel()
    e = np.geomspace(1e-12, 0.25 * p.h[0], 12)
    x = resolution_grid(2 * n, np.concatenate([pts, -1 + e, 1 - e]), per_theta=4)
    return x[~np.isin(x, p.knots[1:-1])]


@dataclass
class DContract:
    value_constant: float
    value_skipped: int
    windows: dict         # name -> measured (7.24') constant
    b_total: float

    def worst_window(self):
        if not self.windows:
            return None, 0.0
        k = max(self.windows, key=self.windows.get)
        return k, self.windows[k]

    def to_dict(self):
        return {"value_constant": self.value_constant, "value_skipped": self.value_skipped,
                "windows": self.windows, "b_total": self.b_total}


def check_D(S: PiecewisePolynomial, res: SimultaneousD, phi, gamma, windows=None, x=None):
    """Measured constants of the value bound and of the windowed second-derivative bound.

    Parameters
    ----------
    windows : dict, optional
        ``name -> (lo, hi)`` interval-index windows ``A``.
    """
    p = S.partition
    n = S.n
    x = contract_grid(n) if x is None else x
    rho, delta = p.rho(x), p.delta(x)
    k = S.order
    bS = b_functional(S, phi, k) if n > 1 else None
    b = bS.total if bS is not None else 0.0
    dev0 = deviation(S, res, x, 0)
    with np.errstate(under="ignore"):
        den = delta**gamma * phi(rho) * max(b, 1e-300)
    ok = den > 1e-300
    vc = float(np.max(np.abs(dev0[ok]) / den[ok])) if np.any(ok) else 0.0
    out = {}
    if windows:
        dev2 = deviation(S, res, x, 2)
        for name, (lo, hi) in windows.items():
            a, c = p.knots[hi], p.knots[lo - 1]
            inA = (x > a) & (x < c)
            if not np.any(inA):
                continue
            bA = bS.window(range(lo, hi + 1)) if bS is not None else 0.0
            d = np.minimum(np.where(a > -1, x - a, np.inf), np.where(c < 1, c - x, np.inf))
            with np.errstate(under="ignore", divide="ignore", over="ignore"):
                tail = b * (n / res.n1) * np.minimum(rho / d, 1e300) ** (gamma + 1)
                rhs = delta**gamma * phi(rho) / rho**2 * (bA + tail)
            sel = inA & (rhs > 1e-300)
            vals = np.abs(dev2[sel]) / rhs[sel]
            out[name] = float(np.max(vals)) if vals.size else 0.0
    return DContract(vc, int(np.sum(~ok)), out, b)
