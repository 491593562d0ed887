"""Tail-accurate evaluation of kernel steps and ramps, and their envelope constants.

Series evaluation of a step ``tau`` loses all relative accuracy in its tails,
where the values are far below rounding of the O(1) coefficients.  The
envelope checks need those tails, so here the closed-form integrands are
integrated segment by segment with Gauss rules and accumulated from the
left (values near -1) and from the right (complements near +1).  Every
accumulated term is sign-definite in the tail it serves, so no cancellation
occurs.
"""
from __future__ import annotations

import numpy as np

from .kernels import KernelBank, KernelParams, kernel_bank, pair_kernels
from .partition import build_partition
from .poly import gauss_nodes


def resolution_grid(n_bank, extra=None, per_theta=8):
    """Sorted grid on [-1, 1] fine enough in ``arccos x`` for a bank of size ``n_bank``."""
    m = per_theta * 2 * n_bank
    theta = np.linspace(0.0, np.pi, m + 1)
    pts = [np.cos(theta), [-1.0, 1.0]]
    if extra is not None:
        pts.append(np.asarray(extra, dtype=float))
    return np.unique(np.clip(np.concatenate(pts), -1.0, 1.0))


class TailProfile:
    """Cumulative integrals of ``sum_l w_l theta_l / d_l`` on a sorted grid.

    Attributes
    ----------
    x : ndarray
    density : ndarray
        The mixture density at ``x``.
    left, right : ndarray
        ``int_{-1}^x`` and ``int_x^1`` of the density.
    left2, right2 : ndarray
        ``int_{-1}^x left`` and ``int_x^1 right``.
    """

    def __init__(self, bank: KernelBank, weights: dict, x, nodes=8):
        x = np.asarray(x, dtype=float)
        self.x = x
        a, b = x[:-1], x[1:]
        gx, gw = gauss_nodes(0.0, 1.0, nodes)
        width = (b - a)[:, None]
        pts = a[:, None] + width * gx[None, :]
        wts = width * gw[None, :]
        dens_pts = np.zeros_like(pts)
        self.density = np.zeros_like(x)
        for j, w in weights.items():
            if w == 0:
                continue
            dens_pts += w * bank.density(j, pts.ravel()).reshape(pts.shape)
            self.density += w * bank.density(j, x)
        seg = np.sum(wts * dens_pts, axis=1)
        seg_left_moment = np.sum(wts * (b[:, None] - pts) * dens_pts, axis=1)
        seg_right_moment = np.sum(wts * (pts - a[:, None]) * dens_pts, axis=1)
        M = x.size
        left = np.zeros(M)
        left2 = np.zeros(M)
        for i in range(M - 1):
            left[i + 1] = left[i] + seg[i]
            left2[i + 1] = left2[i] + (b[i] - a[i]) * left[i] + seg_left_moment[i]
        right = np.zeros(M)
        right2 = np.zeros(M)
        for i in range(M - 2, -1, -1):
            right[i] = right[i + 1] + seg[i]
            right2[i] = right2[i + 1] + (b[i] - a[i]) * right[i + 1] + seg_right_moment[i]
        self.left, self.right, self.left2, self.right2 = left, right, left2, right2


def _ratio(num, den):
    num = np.abs(num)
    out = np.zeros_like(num)
    pos = den > 0
    out[pos] = num[pos] / den[pos]
    bad = ~pos & (num > 0)
    out[bad] = np.inf
    return out


def ramp_envelopes(profile: TailProfile, n, j, alpha, beta, knot):
    """Envelope ratios of a ramp with second derivative ``profile.density``.

    The ramp ``q`` satisfies ``q(-1) = q'(-1) = 0`` and ``q(1) = 1 - knot``,
    so near +1 ``1 - q' = right`` and ``(x - knot) - q = -right2``.

    Returns
    -------
    dict
        Maxima of ``|q''| h_j / (delta^a psi^b)``, ``|chi_j - q'| / (delta^a psi^b)``
        and ``|Phi_j - q| / (h_j delta^a psi^(b-1))``.
    """
    p = build_partition(n)
    x = profile.x
    hj = p.length(j)
    delta = p.delta(x) ** alpha
    psi = p.psi(j, x)
    below = x < knot
    first = np.where(below, profile.left, profile.right)
    ramp = np.where(below, profile.left2, profile.right2)
    return {
        "second": float(np.max(_ratio(profile.density * hj, delta * psi**beta))),
        "first": float(np.max(_ratio(first, delta * psi**beta))),
        "value": float(np.max(_ratio(ramp, hj * delta * psi ** (beta - 1)))),
    }


def pair_envelopes(n, params: KernelParams, extra_grid_size=4000):
    """Measured envelope constants and sign checks of ``p_j``, ``pt_j`` over all ``j``.

    Returns
    -------
    dict
        ``second``, ``first``, ``value``: maxima over ``j`` and both kernels;
        ``p_min_second``: smallest ``p_j''`` value (closed form);
        ``pt_max_outside``: largest ``pt_j''`` outside ``I_j``;
        ``p_floor``: smallest ``p_j'' h_j / (delta^(8a) psi^(30(a+b)))``.

    Notes
    -----
    Right of ``x_j`` the value deviation is taken from the right tail, i.e.
    against the ramp each kernel reproduces at +1: ``(x - x_j)_+`` for
    ``p_j`` and ``(x - x_{2j-1,2n})_+`` for ``pt_j``.
    """
    pk = pair_kernels(n, params)
    p = build_partition(n)
    alpha, beta = params.alpha, params.beta
    extra = np.concatenate([np.linspace(-1, 1, extra_grid_size), p.knots,
                            np.cos((2 * np.arange(extra_grid_size) + 1) * np.pi / (2 * extra_grid_size))])
    x = resolution_grid(2 * n, extra)
    out = {"second": 0.0, "first": 0.0, "value": 0.0, "p_min_second": np.inf,
           "pt_max_outside": -np.inf, "p_floor": np.inf}
    for j in range(1, n):
        knot = p.knots[j]
        wp = pk.weights_p(j)
        prof = TailProfile(pk.plain, {2 * j: wp[2 * j - 1], 2 * j + 1: wp[2 * j]}, x)
        env = ramp_envelopes(prof, n, j, alpha, beta, knot)
        wt = pk.weights_pt(j)
        prof_t = TailProfile(pk.signed, {2 * j - 1: wt[2 * j - 2], 2 * j: wt[2 * j - 1]}, x)
        env_t = ramp_envelopes(prof_t, n, j, alpha, beta, knot)
        for key in ("second", "first", "value"):
            out[key] = max(out[key], env[key], env_t[key])
        out["p_min_second"] = min(out["p_min_second"], float(np.min(prof.density)))
        outside = (x <= knot) | (x >= p.knots[j - 1])
        out["pt_max_outside"] = max(out["pt_max_outside"], float(np.max(prof_t.density[outside])))
        floor_den = p.delta(x) ** (8 * alpha) * p.psi(j, x) ** (30 * (alpha + beta))
        live = floor_den > 0
        out["p_floor"] = min(out["p_floor"],
                             float(np.min(prof.density[live] * p.length(j) / floor_den[live])))
    return out


def step_envelopes(n, params: KernelParams, extra_grid_size=4000):
    """First-order analogue for ``tau_j`` and the signed steps on the partition itself (``j <= n-1``)."""
    plain = kernel_bank(n, 0, 0, params.xi, params.mu)
    signed = kernel_bank(n, 1, 1, params.xi, params.mu)
    p = build_partition(n)
    alpha, beta = params.alpha, params.beta
    x = resolution_grid(n, np.concatenate([np.linspace(-1, 1, extra_grid_size), p.knots]))
    out = {"first": 0.0, "value": 0.0, "tau_min_first": np.inf, "signed_max_outside": -np.inf}
    for j in range(1, n):
        knot = p.knots[j]
        for bank, is_signed in ((plain, False), (signed, True)):
            prof = TailProfile(bank, {j: 1.0}, x)
            hj = p.length(j)
            den = p.delta(x) ** alpha * p.psi(j, x) ** beta
            step = np.where(x < knot, prof.left, prof.right)
            out["first"] = max(out["first"], float(np.max(_ratio(prof.density * hj, den))))
            out["value"] = max(out["value"], float(np.max(_ratio(step, den))))
            if is_signed:
                outside = (x <= knot) | (x >= p.knots[j - 1])
                out["signed_max_outside"] = max(out["signed_max_outside"],
                                                float(np.max(prof.density[outside])))
            else:
                out["tau_min_first"] = min(out["tau_min_first"], float(np.min(prof.density)))
    return out


def ramp_q_envelope(n, params: KernelParams, extra_grid_size=4000):
    """``sup |Phi_j - q_j| / (h_j delta^a psi^(b-1))`` over ``1 <= j <= n-2`` for exponents (0, 0)."""
    from .kernels import q_weights
    bank = kernel_bank(n, 0, 0, params.xi, params.mu)
    p = build_partition(n)
    x = resolution_grid(n, np.concatenate([np.linspace(-1, 1, extra_grid_size), p.knots]))
    worst = 0.0
    for j in range(1, n - 1):
        w, lam = q_weights(bank, j)
        prof = TailProfile(bank, {j: lam, j + 1: 1 - lam}, x)
        env = ramp_envelopes(prof, n, j, params.alpha, params.beta, p.knots[j])
        worst = max(worst, env["value"])
    return worst


def _bank_weights(w):
    return {int(i) + 1: float(w[i]) for i in np.nonzero(w)[0]}


class CombinationProfile:
    """Tail-accurate values of ``sum a_p[j] p_j + sum a_pt[j] pt_j`` on a sorted grid.

    Every ``p_j`` and ``pt_j`` vanishes with its derivative at -1 and is
    linear with slope 1 near +1 (``x - x_j`` for ``p_j``, ``x - x_{2j-1,2n}``
    for ``pt_j``), so the combination is a left double
    integral near -1 and ``L(x) - right2`` style near +1, with ``L`` the sum of
    the limiting linear functions.  The two forms are joined at ``split``.

    Attributes
    ----------
    x, second, first, value : ndarray
    left2, right2 : ndarray
        Double integrals of the mixture from -1 and from +1.
    """

    def __init__(self, pk, a_p, a_pt, x, split=0.0, nodes=8):
        x = np.asarray(x, dtype=float)
        n = pk.n
        # value at +1 of p_j is 1 - x_{2j,2n}, of pt_j it is 1 - x_{2j-1,2n}
        fine = build_partition(2 * n).knots
        self.x = x
        second = np.zeros_like(x)
        left1 = np.zeros_like(x)
        right1 = np.zeros_like(x)
        left2 = np.zeros_like(x)
        right2 = np.zeros_like(x)
        slope = 0.0
        intercept = 0.0
        for coeffs, bank, wfun, knots in ((a_p, pk.plain, pk.weights_p, fine[2:2 * n:2]),
                                          (a_pt, pk.signed, pk.weights_pt, fine[1:2 * n - 1:2])):
            if coeffs is None:
                continue
            coeffs = np.asarray(coeffs, dtype=float)
            w = np.zeros(2 * n)
            for j in np.nonzero(coeffs)[0] + 1:
                w += coeffs[j - 1] * wfun(j)
            if not np.any(w):
                continue
            prof = TailProfile(bank, _bank_weights(w), x, nodes=nodes)
            second += prof.density
            left1 += prof.left
            right1 += prof.right
            left2 += prof.left2
            right2 += prof.right2
            slope += float(np.sum(coeffs))
            intercept -= float(np.dot(coeffs, knots))
        below = x <= split
        self.second = second
        self.first = np.where(below, left1, slope - right1)
        self.value = np.where(below, left2, slope * x + intercept + right2)
        self.left2, self.right2 = left2, right2
        self.slope, self.intercept = slope, intercept


def tail_integrals(bank: KernelBank, weights: dict, x, order, nodes=8):
    """``int_{-1}^x (x-t)^m rho`` and ``int_x^1 (t-x)^m rho`` for ``m = 0..order``.

    ``rho = sum_l w_l theta_l / d_l``.  Both families are accumulated segment
    by segment with the binomial shift, so a tail is never obtained as a
    difference of large numbers.

    Returns
    -------
    left, right : ndarray, shape (order + 1, len(x))
    """
    from math import comb
    x = np.asarray(x, dtype=float)
    a, b = x[:-1], x[1:]
    gx, gw = gauss_nodes(0.0, 1.0, nodes)
    width = (b - a)[:, None]
    pts = a[:, None] + width * gx[None, :]
    wts = width * gw[None, :]
    dens = np.zeros_like(pts)
    for j, w in weights.items():
        if w:
            dens += w * bank.density(j, pts.ravel()).reshape(pts.shape)
    seg_l = np.array([np.sum(wts * (b[:, None] - pts) ** m * dens, axis=1) for m in range(order + 1)])
    seg_r = np.array([np.sum(wts * (pts - a[:, None]) ** m * dens, axis=1) for m in range(order + 1)])
    M = x.size
    left = np.zeros((order + 1, M))
    right = np.zeros((order + 1, M))
    d = b - a
    binom = [[comb(m, i) for i in range(m + 1)] for m in range(order + 1)]
    for s in range(M - 1):
        for m in range(order + 1):
            acc = seg_l[m, s]
            for i in range(m + 1):
                acc += binom[m][i] * d[s] ** i * left[m - i, s]
            left[m, s + 1] = acc
    for s in range(M - 2, -1, -1):
        for m in range(order + 1):
            acc = seg_r[m, s]
            for i in range(m + 1):
                acc += binom[m][i] * d[s] ** i * right[m - i, s + 1]
            right[m, s] = acc
    return left, right
