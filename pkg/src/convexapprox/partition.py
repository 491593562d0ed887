"""Chebyshev partition of [-1, 1] and the local scale functions attached to it.

The knots are ``x_j = cos(j*pi/n)`` for ``j = 0..n``, decreasing from 1 to -1.
Interval ``I_j`` is ``[x_j, x_{j-1}]`` for ``j = 1..n``.  Indices outside
``0..n`` follow the usual convention ``x_j = 1`` for ``j < 0`` and ``x_j = -1``
for ``j > n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def endpoint_weight(x):
    """``sqrt(1 - x^2)`` computed as ``sqrt((1 - x)(1 + x))`` for accuracy near +-1."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip((1.0 - x) * (1.0 + x), 0.0, None))


@dataclass(frozen=True, eq=False)
class ChebPartition:
    """Chebyshev partition with ``n`` intervals.

    Parameters
    ----------
    n : int
        Number of intervals, at least 1.

    Attributes
    ----------
    knots : ndarray, shape (n + 1,)
        ``knots[j] = x_j``.
    h : ndarray, shape (n,)
        ``h[j - 1]`` is the length of ``I_j``.
    """

    n: int
    knots: np.ndarray
    h: np.ndarray

    def __repr__(self):
        return f"ChebPartition(n={self.n})"

    # ------------------------------------------------------------------ knots
    def knot(self, j):
        """Knot ``x_j`` with the out-of-range convention, vectorized over ``j``."""
        j = np.asarray(j)
        jc = np.clip(j, 0, self.n)
        out = self.knots[jc]
        out = np.where(j < 0, 1.0, out)
        out = np.where(j > self.n, -1.0, out)
        return out if out.ndim else float(out)

    def length(self, j):
        """Length ``h_j`` of ``I_j`` (zero outside ``1..n`` by the knot convention)."""
        return self.knot(np.asarray(j) - 1) - self.knot(j)

    def interval(self, j):
        """Endpoints ``(x_j, x_{j-1})`` of ``I_j``."""
        return float(self.knot(j)), float(self.knot(j - 1))

    def midpoints(self):
        """Midpoint of each interval, index ``j - 1``."""
        return 0.5 * (self.knots[1:] + self.knots[:-1])

    def interval_index(self, x):
        """Index ``j`` of the interval containing ``x``.

        A knot ``x_j`` is assigned to ``I_j``, the interval having it as left
        endpoint, so ``x = 1`` maps to 1 and ``x = -1`` maps to ``n``.

        Raises
        ------
        ValueError
            If any ``x`` lies outside ``[-1, 1]``.
        """
        xa = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(xa)) or np.any(np.abs(xa) > 1.0):
            raise ValueError("x must lie in [-1, 1]")
        ascending = self.knots[::-1]
        n_greater = (self.n + 1) - np.searchsorted(ascending, xa, side="right")
        j = np.clip(n_greater, 1, self.n)
        return j if j.ndim else int(j)

    # -------------------------------------------------------- scale functions
    def rho(self, x):
        """Local scale ``phi(x)/n + 1/n^2``."""
        return endpoint_weight(x) / self.n + 1.0 / self.n**2

    def delta(self, x):
        """``min(1, n * phi(x))``."""
        return np.minimum(1.0, self.n * endpoint_weight(x))

    def psi(self, j, x):
        """``h_j / (|x - x_j| + h_j)``, broadcasting ``j`` against ``x``."""
        hj = self.length(j)
        return hj / (np.abs(np.asarray(x) - self.knot(j)) + hj)

    def dist_to_interval(self, j, x):
        """Distance from ``x`` to ``I_j``."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.knot(j), self.knot(np.asarray(j) - 1)
        return np.maximum(0.0, np.maximum(lo - x, x - hi))

    # ------------------------------------------------------------- refinement
    def refine(self, factor):
        """Partition with ``factor * n`` intervals; knot ``x_j`` becomes ``x_{factor*j}``."""
        return build_partition(self.n * int(factor))


@lru_cache(maxsize=64)
def build_partition(n) -> ChebPartition:
    """Build the Chebyshev partition with ``n`` intervals.

    Examples
    --------
    >>> build_partition(2).knots.round(12).tolist()
    [1.0, 0.0, -1.0]
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    knots = np.cos(np.pi * np.arange(n + 1) / n)
    knots[0], knots[-1] = 1.0, -1.0
    if n % 2 == 0:
        knots[n // 2] = 0.0
    # exact symmetry keeps the lengths symmetric to the last bit
    half = (n + 1) // 2
    knots[n - np.arange(half)] = -knots[np.arange(half)]
    knots.setflags(write=False)
    h = knots[:-1] - knots[1:]
    h.setflags(write=False)
    return ChebPartition(n=n, knots=knots, h=h)
