"""Correcting polynomials with prescribed second-derivative signs on a block.

For a block ``E`` of consecutive intervals and a subset ``J`` of them, the
polynomial

    Q = kappa * phi(h*) / h* * ( (m_E/m_J) sum_{j in A} p_j + sum_{j in B~} lam_j p^_j )

is convex on ``J`` and away from ``E``, only mildly concave on ``E \\ J`` and
small everywhere.  ``A`` collects ``J`` and the two extreme intervals of
``E``; the coefficients ``lam_j`` over a centred sub-block ``B~`` cancel the
linear growth of the ``p_j`` to the right of ``E``; ``p^_j`` is ``pt_j`` for
negative ``lam_j`` and ``p_j`` otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..kernel_checks import CombinationProfile, resolution_grid
from ..kernels import KernelParams, pair_kernels
from ..partition import build_partition
from .blocks import block_bounds, dist_to_block, in_intervals
from .combination import CombinationError, combination_coeffs


class BlockSizeError(ValueError):
    """The block cannot host the construction."""


PAPER_MIN_BLOCK = 100


@dataclass
class CorrectingQ:
    """One correcting polynomial and the sets used to build it.

    ``a_p`` and ``a_pt`` are the coefficient arrays (indexed ``j - 1``) of the
    ``p_j`` and ``pt_j`` for :meth:`PairKernels.combination`, already scaled
    by ``kappa * phi(h*) / h*``.
    """

    n: int
    E: tuple
    J: list
    A: list
    B: list
    E_tilde: tuple
    B_tilde: list
    lam: dict
    h_star: float
    scale: float
    kappa: float
    params: KernelParams
    a_p: np.ndarray
    a_pt: np.ndarray
    flags: list = field(default_factory=list)

    @property
    def m_E(self):
        return self.E[1] - self.E[0] + 1

    @property
    def m_J(self):
        return len(self.J)

    def polynomial(self):
        pk = pair_kernels(self.n, self.params)
        return pk.combination(self.a_p, self.a_pt)

    def second_polynomial(self):
        """``Q''`` as a polynomial (mixture densities, no differentiation)."""
        from ..poly import Polynomial
        pk = pair_kernels(self.n, self.params)
        total = None
        for coeffs, bank, wfun in ((self.a_p, pk.plain, pk.weights_p),
                                   (self.a_pt, pk.signed, pk.weights_pt)):
            w = np.zeros(2 * self.n)
            for j in np.nonzero(coeffs)[0] + 1:
                w += coeffs[j - 1] * wfun(j)
            part = Polynomial.from_samples(bank.mixture_density(w))
            total = part if total is None else total + part
        return total

    def second(self, x):
        """``Q''(x)`` from the closed-form kernel integrands."""
        pk = pair_kernels(self.n, self.params)
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for coeffs, bank, wfun in ((self.a_p, pk.plain, pk.weights_p),
                                   (self.a_pt, pk.signed, pk.weights_pt)):
            w = np.zeros(2 * self.n)
            for j in np.nonzero(coeffs)[0] + 1:
                w += coeffs[j - 1] * wfun(j)
            for i in np.nonzero(w)[0]:
                out += w[i] * bank.density(int(i) + 1, x)
        return out

    def rescaled(self, kappa):
        f = kappa / self.kappa
        return CorrectingQ(self.n, self.E, self.J, self.A, self.B, self.E_tilde, self.B_tilde,
                           self.lam, self.h_star, self.scale, kappa, self.params,
                           self.a_p * f, self.a_pt * f, list(self.flags))

    def to_dict(self):
        return {"E": list(self.E), "J": self.J, "A": self.A, "B_tilde": self.B_tilde,
                "E_tilde": list(self.E_tilde), "h_star": self.h_star, "kappa": self.kappa,
                "lambda": {str(k): v for k, v in self.lam.items()}, "flags": self.flags}


def _centred_window(p, lo, hi, size):
    """Window of ``size`` consecutive intervals in ``lo..hi`` whose centre is closest to 0."""
    best, best_c = None, np.inf
    for i in range(lo, hi - size + 2):
        a, b = p.knots[i + size - 1], p.knots[i - 1]
        c = abs(0.5 * (a + b))
        if c < best_c - 1e-15:
            best, best_c = (i, i + size - 1), c
    return best


def _signed_weights(p, n, rng, Bt, A, flags):
    """Cancellation weights on ``Bt`` consistent with the kernel each index uses.

    A negative weight selects ``pt_j``, whose value at +1 is ``1 - x_{2j-1,2n}``
    rather than ``1 - x_j``, so the identity is solved with that knot.  The
    minimum-norm solution is iterated on its sign pattern; if the pattern
    cycles, every visited pattern is retried with the signs imposed.
    """
    Bt_arr = np.array(Bt)
    shifted = np.cos((2 * Bt_arr.astype(float) - 1) * np.pi / (2 * n))

    def knots_for(neg):
        k = p.knots.copy()
        k[Bt_arr[neg]] = shifted[neg]
        return k

    a = combination_coeffs(rng, Bt, A, p.knots)
    seen = []
    for _ in range(8):
        neg = a < 0
        if any(np.array_equal(neg, s) for s in seen):
            break
        seen.append(neg)
        a = combination_coeffs(rng, Bt, A, knots_for(neg))
        if np.array_equal(a < 0, neg):
            return a
    best = None
    for neg in seen:
        try:
            b = combination_coeffs(rng, Bt, A, knots_for(neg), signs=np.where(neg, -1, 1))
        except CombinationError:
            continue
        b = np.where(neg, np.minimum(b, 0.0), np.maximum(b, 0.0))
        if best is None or np.max(np.abs(b)) < np.max(np.abs(best)):
            best = b
    if best is None:
        flags.append("no sign-consistent cancellation weights")
        return a
    flags.append("cancellation weights sign-constrained")
    return best


def correcting_Q(n, E, J, phi, params: KernelParams, kappa, strict=False):
    """Build ``Q_n(., E, J)``.

    Parameters
    ----------
    n : int
    E : tuple of int
        Block ``(lo, hi)`` of consecutive interval indices.
    J : iterable of int
        Interval indices inside ``E`` (at least one).
    phi : callable
        Majorant ``phi(t)``.
    params : KernelParams
    kappa : float
    strict : bool
        Enforce the full-size preconditions (at least 100 intervals and
        ``m_J < m_E / 4``); otherwise violations are only flagged.

    Raises
    ------
    BlockSizeError
        "E below minimum size" when the block cannot host the cancellation.
    """
    p = build_partition(n)
    lo, hi = int(E[0]), int(E[1])
    if not 1 <= lo <= hi <= n:
        raise ValueError("block outside the partition")
    J = sorted(set(int(j) for j in J))
    if not J or not set(J) <= set(range(lo, hi + 1)):
        raise ValueError("J must be a nonempty subset of E")
    m_E, m_J = hi - lo + 1, len(J)
    flags = []
    if m_E < PAPER_MIN_BLOCK:
        if strict:
            raise BlockSizeError("E below minimum size")
        flags.append("below-paper-scale blocks")
    if not m_J < m_E / 4:
        if strict:
            raise BlockSizeError("E below minimum size: too many intervals in J")
        flags.append("m_J >= m_E/4")
    calE = [i for i in range(lo, hi + 1) if i != n]
    calJ = [j for j in J if j != n]
    j_lo, j_hi = min(calE), max(calE)
    A = sorted(set(calJ) | {j_lo, j_hi})
    B = [i for i in calE if i not in A]
    if len(B) < 2:
        raise BlockSizeError("E below minimum size")
    size = max(1, m_E // 3)
    Et = _centred_window(p, lo, hi, size)
    Bt = [i for i in range(Et[0], Et[1] + 1) if i in B]
    while len(Bt) < 2:
        if strict:
            raise BlockSizeError("E below minimum size")
        size += 1
        Et = _centred_window(p, lo, hi, size)
        Bt = [i for i in range(Et[0], Et[1] + 1) if i in B]
        if "sub-block enlarged" not in flags:
            flags.append("sub-block enlarged")
    # even count: drop the index farthest from the sub-block centre
    if len(Bt) % 2:
        c = 0.5 * (p.knots[Et[1]] + p.knots[Et[0] - 1])
        mid = 0.5 * (p.knots[np.array(Bt)] + p.knots[np.array(Bt) - 1])
        Bt = sorted(np.delete(np.array(Bt), int(np.argmax(np.abs(mid - c)))).tolist())
    l1, l2 = len(Bt) // 2, len(A)
    rng = range(min(A + Bt), max(A + Bt) + 1)
    a = _signed_weights(p, n, rng, Bt, A, flags)
    lam_arr = (m_E / m_J) * (l2 / l1) * a
    lam = {int(j): float(v) for j, v in zip(Bt, lam_arr)}
    h_star = float(np.max(p.h[Et[0] - 1: Et[1]]))
    scale = float(phi(h_star)) / h_star
    c = kappa * scale
    a_p = np.zeros(n - 1)
    a_pt = np.zeros(n - 1)
    for j in A:
        a_p[j - 1] += c * m_E / m_J
    for j, v in lam.items():
        if v < 0:
            a_pt[j - 1] += c * v
        else:
            a_p[j - 1] += c * v
    return CorrectingQ(n, (lo, hi), J, A, B, Et, Bt, lam, h_star, scale, kappa, params,
                       a_p, a_pt, flags)


# --------------------------------------------------------------------------
# grid checks of the three conclusions


def check_grid(n, block=None, per_interval=24, offset=1.0 / 128):
    """Sorted evaluation grid: interior points of every interval plus a resolution grid."""
    p = build_partition(n)
    u = np.linspace(-1 + 2 * offset, 1 - 2 * offset, per_interval)
    c = p.midpoints()
    pts = (c[:, None] + 0.5 * p.h[:, None] * u[None, :]).ravel()
    x = resolution_grid(2 * n, pts, per_theta=4)
    # drop knots: second derivatives of the spline side are undefined there
    keep = ~np.isin(x, p.knots[1:-1])
    return x[keep]


@dataclass
class QCheck:
    """Measured constants of the three conclusions for one ``Q``."""

    floor: float            # min Q'' / RHS on J and off E
    floor_skipped: int      # points where RHS underflows
    min_second_outside: float
    concavity: float        # max of -Q'' / (delta^a phi/rho^2) on E \ J
    envelope: float         # max |Q| / (m_E^(k+6) delta^a rho phi(rho) sum ...)
    envelope_skipped: int

    def passes(self, C1, C_env=np.inf):
        return bool(self.floor >= C1 and self.min_second_outside >= 0.0
                    and self.concavity <= 1.0 and self.envelope <= C_env)

    def to_dict(self):
        return dict(self.__dict__)


def check_correcting_Q(Q: CorrectingQ, phi, k, x=None, values=True):
    """Evaluate the floor, concavity and envelope inequalities on a grid.

    ``Q''`` comes from the closed-form integrands; ``Q`` from the tail-accurate
    double integrals, so the envelope is meaningful close to +-1.
    """
    n = Q.n
    p = build_partition(n)
    x = check_grid(n) if x is None else np.asarray(x, dtype=float)
    alpha, beta = Q.params.alpha, Q.params.beta
    rho = p.rho(x)
    delta = p.delta(x)
    base = phi(rho) / rho**2
    m_E, m_J = Q.m_E, Q.m_J
    beta1 = 60 * (alpha + beta) + k + 1
    d = dist_to_block(p, Q.E, x)
    lo, hi = block_bounds(p, Q.E)
    inE = (x >= lo) & (x <= hi)
    inJ = in_intervals(p, Q.J, x)
    region = inJ | ~inE
    q2 = Q.second(x)
    with np.errstate(under="ignore", divide="ignore", invalid="ignore"):
        rhs = (m_E / m_J) * delta ** (8 * alpha) * base * (rho / np.maximum(rho, d)) ** beta1
    live = region & (rhs > 1e-300)
    floor = float(np.min(q2[live] / rhs[live])) if np.any(live) else np.inf
    dead = region & ~live
    min_out = float(np.min(q2[dead])) if np.any(dead) else 0.0
    concave_region = inE & ~inJ
    with np.errstate(divide="ignore", invalid="ignore"):
        den1 = delta**alpha * base
        ok1 = concave_region & (den1 > 0)
        conc = float(np.max(-q2[ok1] / den1[ok1])) if np.any(ok1) else -np.inf
    env, env_skip = 0.0, 0
    if values:
        prof = CombinationProfile(pair_kernels(n, Q.params), Q.a_p, Q.a_pt, x)
        inside = np.arange(Q.E[0], Q.E[1] + 1)
        xs = p.knots[inside]
        hs = p.h[inside - 1]
        s = np.sum(hs[None, :] / (np.abs(x[:, None] - xs[None, :]) + rho[:, None]) ** 2, axis=1)
        den = float(m_E) ** (k + 6) * delta**alpha * rho * phi(rho) * s
        # |Q| is only known to about eps * sum|coefficients| (the ramps cancel)
        resolution = 16 * np.finfo(float).eps * (np.sum(np.abs(Q.a_p)) + np.sum(np.abs(Q.a_pt)))
        okv = den > max(resolution, 1e-300)
        env = float(np.max(np.abs(prof.value[okv]) / den[okv])) if np.any(okv) else 0.0
        env_skip = int(np.sum(~okv))
    return QCheck(floor, int(np.sum(dead)), min_out, conc, env, env_skip)
