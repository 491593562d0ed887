"""Piecewise polynomials on a Chebyshev partition.

Each piece ``p_j`` lives on ``I_j = [x_j, x_{j-1}]`` and is stored by its
power coefficients in the local variable ``t = (x - c_j) / s_j``, where
``c_j`` is the midpoint and ``s_j = h_j / 2``.  Pieces can be evaluated
anywhere on the real line (needed when comparing neighbouring pieces).
"""
from __future__ import annotations

from math import factorial

import numpy as np

from .partition import ChebPartition, build_partition
from .poly import Polynomial


def _horner(coeffs, t):
    """Evaluate rows of ascending power coefficients at matching ``t`` values."""
    out = np.zeros(np.broadcast(coeffs[..., 0], t).shape)
    for m in range(coeffs.shape[-1] - 1, -1, -1):
        out = out * t + coeffs[..., m]
    return out


class PiecewisePolynomial:
    """Continuous piecewise polynomial with knots at the Chebyshev knots.

    Parameters
    ----------
    partition : ChebPartition
    local_coeffs : ndarray, shape (n, order)
        Row ``j - 1`` holds the ascending power coefficients of ``p_j`` in the
        local variable of ``I_j``.
    """

    def __init__(self, partition: ChebPartition, local_coeffs):
        c = np.array(local_coeffs, dtype=float)
        if c.ndim != 2 or c.shape[0] != partition.n:
            raise ValueError("need one coefficient row per interval")
        self.partition = partition
        self.coeffs = c
        self.coeffs.setflags(write=False)
        self.center = partition.midpoints()
        self.half = 0.5 * partition.h

    # ----------------------------------------------------------- builders
    @classmethod
    def from_global_power(cls, partition, power_rows):
        """Pieces given by ascending monomial coefficients in the global ``x``."""
        power_rows = np.asarray(power_rows, dtype=float)
        rows = []
        for j in range(partition.n):
            c, s = 0.5 * (partition.knots[j] + partition.knots[j + 1]), 0.5 * partition.h[j]
            p = np.polynomial.Polynomial(power_rows[j])
            # p(c + s t) in ascending powers of t
            q = p(np.polynomial.Polynomial([c, s]))
            row = np.zeros(power_rows.shape[1])
            row[: q.coef.size] = q.coef[: power_rows.shape[1]]
            rows.append(row)
        return cls(partition, np.array(rows))

    @classmethod
    def from_polynomial(cls, partition, p, order):
        """Restrict a global polynomial ``p`` (callable) of degree < order to each interval."""
        rows = []
        t = np.cos(np.pi * np.arange(order) / max(order - 1, 1)) if order > 1 else np.array([0.0])
        V = np.vander(t, order, increasing=True)
        for j in range(partition.n):
            c, s = 0.5 * (partition.knots[j] + partition.knots[j + 1]), 0.5 * partition.h[j]
            rows.append(np.linalg.solve(V, p(c + s * t)))
        return cls(partition, np.array(rows))

    @classmethod
    def from_piece_samples(cls, partition, f, order):
        """Interpolate ``f`` at ``order`` Chebyshev points inside every interval."""
        return cls.from_polynomial(partition, f, order)

    # --------------------------------------------------------- properties
    @property
    def n(self):
        return self.partition.n

    @property
    def order(self):
        """Number of coefficients per piece (degree + 1)."""
        return self.coeffs.shape[1]

    def local(self, j, x):
        return (np.asarray(x, dtype=float) - self.center[j - 1]) / self.half[j - 1]

    # --------------------------------------------------------- evaluation
    def eval_piece(self, j, x):
        """Evaluate the polynomial of piece ``j`` (1-based) at arbitrary ``x``."""
        j = np.asarray(j)
        t = (np.asarray(x, dtype=float) - self.center[j - 1]) / self.half[j - 1]
        return _horner(self.coeffs[j - 1], t)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        j = self.partition.interval_index(np.clip(x, -1.0, 1.0))
        return self.eval_piece(j, x)

    def derivative(self, m=1):
        """Piecewise ``m``-th derivative (a piecewise polynomial, possibly discontinuous)."""
        c = self.coeffs.copy()
        for _ in range(m):
            if c.shape[1] == 1:
                c = np.zeros((self.n, 1))
                break
            powers = np.arange(1, c.shape[1])
            c = c[:, 1:] * powers / self.half[:, None]
        return PiecewisePolynomial(self.partition, c)

    def antiderivative(self, value_at_minus1=0.0):
        """Continuous antiderivative vanishing-adjusted to ``value_at_minus1`` at -1."""
        order = self.order
        c = np.zeros((self.n, order + 1))
        powers = np.arange(1, order + 1)
        c[:, 1:] = self.coeffs / powers * self.half[:, None]
        # fix constants from the left end (interval n) to the right
        left_value = value_at_minus1
        for j in range(self.n, 0, -1):
            c[j - 1, 0] = 0.0
            c[j - 1, 0] = left_value - _horner(c[j - 1], -1.0)
            left_value = _horner(c[j - 1], 1.0)
        return PiecewisePolynomial(self.partition, c)

    def knot_jumps(self, m=0):
        """Jumps ``S^(m)(x_j+) - S^(m)(x_j-)`` at interior knots ``j = 1..n-1``."""
        d = self.derivative(m) if m else self
        # right piece of x_j is I_j (local t = -1), left piece is I_{j+1} (t = +1)
        right = _horner(d.coeffs[:-1], -1.0)
        left = _horner(d.coeffs[1:], 1.0)
        return right - left

    def values_at_knots(self):
        """Values at ``x_0..x_n`` from the adjacent pieces (right-hand piece where possible)."""
        v = np.empty(self.n + 1)
        v[:-1] = _horner(self.coeffs, 1.0)
        v[-1] = _horner(self.coeffs[-1], -1.0)
        return v

    def scale_of(self):
        """A representative magnitude used for relative tolerances."""
        return max(float(np.max(np.abs(self.values_at_knots()))), 1e-300)

    def is_c1(self, tol=1e-9):
        if self.n == 1:
            return True
        scale = max(float(np.max(np.abs(self.derivative().values_at_knots()))), 1.0)
        return bool(np.max(np.abs(self.knot_jumps(1))) <= tol * scale)

    def interior_grid(self, per_interval, offset=1.0 / 128):
        """Points strictly inside each interval, knots excluded by ``offset * h_j``."""
        u = np.linspace(-1 + 2 * offset, 1 - 2 * offset, per_interval)
        x = self.center[:, None] + self.half[:, None] * u[None, :]
        return x

    def min_second_derivative(self, per_interval=None):
        """Smallest sampled ``S''`` inside each interval (array of length n)."""
        per_interval = per_interval or max(4 * self.order, 8)
        d2 = self.derivative(2)
        u = np.linspace(-1, 1, per_interval)
        vals = _horner(d2.coeffs[:, None, :], u[None, :])
        return vals.min(axis=1)

    def is_convex(self, tol=1e-9):
        d2 = self.min_second_derivative()
        scale = max(float(np.max(np.abs(self.derivative(2).coeffs))), 1e-300)
        jumps = self.knot_jumps(1)
        sl = max(float(np.max(np.abs(self.derivative().values_at_knots()))), 1e-300)
        return bool(np.all(d2 >= -tol * scale) and np.all(jumps >= -tol * sl))

    # -------------------------------------------------------- operations
    def __add__(self, other):
        if isinstance(other, PiecewisePolynomial):
            if other.partition.n != self.n:
                raise ValueError("partitions differ")
            k = max(self.order, other.order)
            a = np.zeros((self.n, k))
            a[:, : self.order] += self.coeffs
            a[:, : other.order] += other.coeffs
            return PiecewisePolynomial(self.partition, a)
        c = self.coeffs.copy()
        c[:, 0] += float(other)
        return PiecewisePolynomial(self.partition, c)

    def __neg__(self):
        return PiecewisePolynomial(self.partition, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, a):
        return PiecewisePolynomial(self.partition, self.coeffs * float(a))

    __rmul__ = __mul__

    def add_linear(self, value_at_minus1, slope):
        """Add ``value_at_minus1 + slope (x + 1)`` to every piece."""
        c = np.zeros((self.n, max(self.order, 2)))
        c[:, : self.order] = self.coeffs
        c[:, 0] += value_at_minus1 + slope * (self.center + 1.0)
        c[:, 1] += slope * self.half
        return PiecewisePolynomial(self.partition, c)

    def refine(self, factor):
        """Same function on the partition with ``factor * n`` intervals.

        Only valid for factors whose knots contain the current knots, which is
        the case for any integer factor of Chebyshev partitions.
        """
        fine = build_partition(self.n * factor)
        rows = []
        for J in range(1, fine.n + 1):
            j = (J - 1) // factor + 1
            c, s = fine.midpoints()[J - 1], 0.5 * fine.h[J - 1]
            t0 = (c - self.center[j - 1]) / self.half[j - 1]
            ratio = s / self.half[j - 1]
            p = np.polynomial.Polynomial(self.coeffs[j - 1])
            q = p(np.polynomial.Polynomial([t0, ratio]))
            row = np.zeros(self.order)
            row[: q.coef.size] = q.coef[: self.order]
            rows.append(row)
        return PiecewisePolynomial(fine, np.array(rows))

    def piece_as_polynomial(self, j):
        """Piece ``j`` as a global Chebyshev-basis :class:`Polynomial`."""
        from numpy.polynomial import chebyshev as C
        p = np.polynomial.Polynomial(self.coeffs[j - 1])
        g = p(np.polynomial.Polynomial([-self.center[j - 1] / self.half[j - 1], 1.0 / self.half[j - 1]]))
        return Polynomial(C.poly2cheb(g.coef))

    def power_coeffs_global(self, j):
        """Ascending monomial coefficients of piece ``j`` in global ``x`` (low orders only)."""
        p = np.polynomial.Polynomial(self.coeffs[j - 1])
        g = p(np.polynomial.Polynomial([-self.center[j - 1] / self.half[j - 1], 1.0 / self.half[j - 1]]))
        out = np.zeros(self.order)
        out[: g.coef.size] = g.coef[: self.order]
        return out

    def derivative_at(self, x, m, side=+1):
        """One-sided ``m``-th derivative at ``x`` (``side=+1`` uses the piece to the right)."""
        j = self.partition.interval_index(x)
        if side < 0 and j < self.n and x == self.partition.knots[j]:
            j = j + 1
        if side > 0 and j > 1 and x == self.partition.knots[j - 1]:
            j = j - 1
        d = self.derivative(m) if m else self
        return float(d.eval_piece(j, x))

    def to_dict(self, certificate=None, r=None):
        out = {
            "n": self.n,
            "knots": self.partition.knots.tolist(),
            "piece_coeffs": [self.power_coeffs_global(j).tolist() for j in range(1, self.n + 1)],
            "local_coeffs": self.coeffs.tolist(),
        }
        if r is not None:
            out["r"] = r
        if certificate is not None:
            out["convexity_certificate"] = certificate
        return out


def taylor_factorials(order):
    return np.array([factorial(m) for m in range(order)], dtype=float)
