"""Index-range helpers for unions of consecutive partition intervals.

A block ``(lo, hi)`` with ``lo <= hi`` stands for ``I_lo ∪ ... ∪ I_hi``, i.e.
the interval ``[x_hi, x_{lo-1}]``; ``lo`` is the right-most piece.
"""
from __future__ import annotations

import numpy as np

from ..partition import ChebPartition


def block_bounds(p: ChebPartition, block):
    lo, hi = block
    return float(p.knots[hi]), float(p.knots[lo - 1])


def block_indices(block):
    lo, hi = block
    return list(range(lo, hi + 1))


def dist_to_block(p: ChebPartition, block, x):
    a, b = block_bounds(p, block)
    x = np.asarray(x, dtype=float)
    return np.maximum(0.0, np.maximum(a - x, x - b))


def in_intervals(p: ChebPartition, indices, x):
    """Mask of points lying in the closed union of ``I_j``, ``j`` in ``indices``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=bool)
    for j in indices:
        out |= (x >= p.knots[j]) & (x <= p.knots[j - 1])
    return out


def extend(n, block, times=1):
    """``A^e``: add one neighbouring interval on each side (clipped to ``1..n``)."""
    lo, hi = block
    return max(1, lo - times), min(n, hi + times)


def runs(indices):
    """Maximal runs of consecutive integers, as ``(lo, hi)`` pairs."""
    idx = sorted(set(int(i) for i in indices))
    out = []
    for i in idx:
        if out and i == out[-1][1] + 1:
            out[-1] = (out[-1][0], i)
        else:
            out.append((i, i))
    return out
