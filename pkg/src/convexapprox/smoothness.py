"""Moduli of smoothness, majorant functions and the piece-disagreement functional."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .partition import ChebPartition, build_partition
from .piecewise import PiecewisePolynomial, _horner


def finite_difference(f, k, u, x):
    """Symmetric ``k``-th difference ``sum_i (-1)^(k-i) C(k,i) f(x - k u / 2 + i u)``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    out = np.zeros(np.broadcast(x, u).shape)
    for i in range(k + 1):
        out = out + (-1) ** (k - i) * comb(k, i) * f(x - 0.5 * k * u + i * u)
    return out


def modulus(f, k, t, interval=(-1.0, 1.0), u_points=512, x_points=2048):
    """Grid lower bound for the ``k``-th modulus of smoothness ``omega_k(f, t; I)``.

    The supremum over step ``u`` in ``(0, t]`` and over admissible centres
    (stencil inside ``I``) is replaced by a maximum over finite grids.

    Examples
    --------
    >>> round(modulus(lambda x: x**2, 2, 0.5), 12)
    0.5
    """
    a, b = map(float, interval)
    if k < 1 or t <= 0:
        raise ValueError("need k >= 1 and t > 0")
    us = np.linspace(t / u_points, t, u_points)
    us = us[k * us <= (b - a)]
    best = 0.0
    for u in us:
        lo, hi = a + 0.5 * k * u, b - 0.5 * k * u
        xs = np.linspace(lo, hi, x_points)
        best = max(best, float(np.max(np.abs(finite_difference(f, k, u, xs)))))
    return best


def second_modulus_table(g, ts, u_points=1024, x_points=2048):
    """``omega_2(g, t)`` on [-1, 1] for each ``t`` in ``ts`` from one shared step grid.

    Steps are log-spaced below ``max(ts)``, together with ``ts`` themselves,
    and the modulus at ``t`` is the running maximum over steps not exceeding ``t``.
    """
    ts = np.asarray(ts, dtype=float)
    tmax = min(float(ts.max()), 1.0)
    us = np.unique(np.concatenate([np.geomspace(min(ts.min(), 1e-7) / 10, tmax, u_points),
                                   ts[ts <= 1.0]]))
    m = np.empty(us.size)
    for i, u in enumerate(us):
        xs = np.linspace(-1 + u, 1 - u, x_points)
        m[i] = np.max(np.abs(g(xs - u) - 2 * g(xs) + g(xs + u)))
    run = np.maximum.accumulate(m)
    idx = np.searchsorted(us, ts, side="right") - 1
    return np.where(idx >= 0, run[np.clip(idx, 0, None)], 0.0)


@dataclass
class Majorant:
    """``phi(t) = scale * t^r * psi(t)`` with ``psi`` given by a table.

    ``psi`` is interpolated as a power law between table points, which keeps
    both ``psi`` nondecreasing and ``psi(t) / t^(k - r)`` nonincreasing.
    Below the first node ``psi`` follows ``t^(k - r)``; beyond the last it is
    constant.
    """

    k: int
    r: int
    t_table: np.ndarray
    psi_table: np.ndarray
    scale: float = 1.0
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        lt, lp = np.log(self.t_table), np.log(self.psi_table)
        tt = np.clip(t, 1e-300, None)
        inner = np.exp(np.interp(np.log(tt), lt, lp))
        e = self.k - self.r
        below = self.psi_table[0] * (tt / self.t_table[0]) ** e
        out = np.where(tt < self.t_table[0], below, inner)
        return np.where(t <= 0, 0.0, out)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.scale * np.abs(t) ** self.r * self.psi(t)

    def rescaled(self, factor):
        return Majorant(self.k, self.r, self.t_table, self.psi_table, self.scale * factor,
                        self.degenerate, list(self.notes))

    def check_class(self, ts=None):
        """Return (nondecreasing, decay) flags of ``psi`` on a test grid."""
        ts = np.geomspace(1e-6, 2.0, 400) if ts is None else np.asarray(ts)
        p = self.psi(ts)
        e = self.k - self.r
        mono = bool(np.all(np.diff(p) >= -1e-14 * p[1:]))
        q = p / ts**e
        decay = bool(np.all(np.diff(q) <= 1e-12 * q[:-1]))
        return mono, decay

    def to_dict(self):
        return {"k": self.k, "r": self.r, "scale": self.scale, "degenerate": self.degenerate,
                "t_i": self.t_table.tolist(), "psi_i": self.psi_table.tolist()}

    @classmethod
    def power(cls, k, r, exponent_extra=None, scale=1.0):
        """``phi(t) = scale * t^(r + e)`` with ``e = k - r`` unless given."""
        e = (k - r) if exponent_extra is None else exponent_extra
        ts = np.geomspace(1e-5, 2.0, 64)
        return cls(k, r, ts, ts**e, scale)


def regularize_table(ts, values, decay_exponent):
    """Smallest table above ``values`` that is nondecreasing with ``values/t^e`` nonincreasing."""
    v = np.asarray(values, dtype=float)
    # subnormals do not survive the divide and multiply below
    v = np.maximum.accumulate(np.where(v < np.finfo(float).tiny, 0.0, v))
    q = v / ts**decay_exponent
    q = np.maximum.accumulate(q[::-1])[::-1]
    return q * ts**decay_exponent


def make_majorant_from(f, r, k_extra=2, n_table=64, t_range=(1e-5, 2.0)):
    """Majorant ``phi(t) = t^r psi(t)`` with ``psi`` a regularized ``omega_2(f^(r), t)``.

    Parameters
    ----------
    f : EvaluableFunction
        Must provide at least ``r`` derivatives.
    r : int
    k_extra : int
        Order of the modulus used for ``psi`` (the class exponent of ``psi``).

    Notes
    -----
    If the tabulated modulus vanishes identically (``f^(r)`` linear), ``psi``
    is replaced by ``eps * t^k_extra`` with ``eps = 1e-12 * scale(f)`` and the
    result is flagged ``degenerate``.
    """
    g = f.derivative(r)
    ts = np.geomspace(t_range[0], t_range[1], n_table)
    if k_extra != 2:
        raw = np.array([modulus(g, k_extra, t) for t in ts])
    else:
        raw = second_modulus_table(g, ts)
    xs = np.linspace(-1, 1, 257)
    fscale = max(float(np.max(np.abs(f(xs)))), 1e-300)
    if np.max(raw) <= 1e-13 * max(float(np.max(np.abs(g(xs)))), fscale):
        eps = 1e-12 * fscale
        maj = Majorant(r + k_extra, r, ts, eps * ts**k_extra, 1.0, True,
                       ["modulus vanishes; psi = eps * t^k_extra substituted"])
        return maj
    psi = regularize_table(ts, raw, k_extra)
    return Majorant(r + k_extra, r, ts, psi)


# --------------------------------------------------------------------------
# piece-disagreement functional


@dataclass
class BReport:
    """Matrix ``b[i-1, j-1]`` of pairwise piece disagreement and window maxima."""

    matrix: np.ndarray
    k: int

    @property
    def total(self):
        return float(np.max(self.matrix))

    def window(self, indices):
        """Maximum over pairs with both intervals in ``indices`` (1-based)."""
        idx = np.asarray(sorted(indices)) - 1
        if idx.size == 0:
            return 0.0
        return float(np.max(self.matrix[np.ix_(idx, idx)]))


def span_lengths(p: ChebPartition):
    """``h_{i,j}``: length of the smallest interval containing ``I_i`` and ``I_j``."""
    i = np.arange(1, p.n + 1)
    lo = np.minimum.outer(i, i)
    hi = np.maximum.outer(i, i)
    return p.knots[lo - 1] - p.knots[hi]


def b_functional(S: PiecewisePolynomial, phi, k=None, samples=None):
    """Pairwise disagreement ``||p_i - p_j||_{I_i} / phi(h_j) * (h_j / h_{i,j})^k``.

    Parameters
    ----------
    S : PiecewisePolynomial
    phi : callable
        Majorant; must not vanish on the interval lengths.
    k : int, optional
        Exponent, defaults to ``S.order``.
    samples : int, optional
        Points per interval, at least ``4k``.

    Raises
    ------
    ValueError
        If ``phi`` vanishes at some interval length ("degenerate majorant").
    """
    p = S.partition
    k = S.order if k is None else int(k)
    samples = max(4 * k, samples or 0)
    ph = np.asarray(phi(p.h), dtype=float)
    if np.any(~(ph > 0)):
        raise ValueError("degenerate majorant")
    n = p.n
    u = np.linspace(-1.0, 1.0, samples)
    pts = S.center[:, None] + S.half[:, None] * u[None, :]  # (n, m): points in I_i
    norms = np.zeros((n, n))
    if n > 1:
        # crossing x_l from I_{l+1} to I_l adds sum_m J_{l,m} (x - x_l)^m / m!;
        # building differences from the jumps avoids cancelling O(|S|) values
        x_l = p.knots[1:n]
        terms = np.zeros((n - 1, n, samples))
        for m in range(S.order):
            d = S.derivative(m) if m else S
            jump = d.knot_jumps()
            size = np.maximum(np.abs(_horner(d.coeffs[:-1], -1.0)), np.abs(_horner(d.coeffs[1:], 1.0)))
            jump = np.where(np.abs(jump) <= 16 * np.finfo(float).eps * size, 0.0, jump)
            if not np.any(jump):
                continue
            terms += (jump / factorial(m))[:, None, None] * (pts[None] - x_l[:, None, None]) ** m
        # cum[l] = sum_{l' < l} terms[l'], so p_i - p_j = cum[j-1] - cum[i-1] for i < j
        cum = np.concatenate([np.zeros((1, n, samples)), np.cumsum(terms, axis=0)])
        for i in range(n):
            diff = cum[:, i, :] - cum[i, i, :][None, :]
            norms[i, :] = np.max(np.abs(diff), axis=1)
    H = span_lengths(p)
    hj = p.h[None, :]
    mat = norms / ph[None, :] * (hj / H) ** k
    return BReport(mat, k)


def b_window(report: BReport, lo_index, hi_index):
    """Window maximum over the consecutive intervals ``lo_index..hi_index``."""
    return report.window(range(lo_index, hi_index + 1))


def curvature_bound_ratio(S: PiecewisePolynomial, phi, per_interval=16):
    """``sup |rho^2 S''| / phi(rho)`` sampled off the knots."""
    p = S.partition
    x = S.interior_grid(per_interval).ravel()
    d2 = S.derivative(2)(x)
    rho = p.rho(x)
    return float(np.max(np.abs(d2) * rho**2 / phi(rho)))
