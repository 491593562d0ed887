"""Coefficients cancelling a sum of linear ramps ``x - x_j``.

Given knots ``x_j``, index sets ``A2`` and ``A1`` (``#A1`` even), find ``a_i``
with

    (1/l2) sum_{A2} (x - x_j) + (1/l1) sum_{A1} a_j (x - x_j) == 0,

i.e. two linear equations (``x`` coefficient and constant term).
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog


class CombinationError(RuntimeError):
    """No coefficients within the magnitude bound were found."""


def _system(A1, A2, knots):
    knots = np.asarray(knots, dtype=float)
    A1 = list(A1)
    A2 = list(A2)
    l1 = len(A1) // 2
    M = np.vstack([np.ones(len(A1)), -knots[A1]]) / l1
    if A2:
        rhs = -np.array([1.0, -float(np.mean(knots[A2]))])
    else:
        rhs = np.zeros(2)
    return M, rhs


def identity_residual(a, A1, A2, knots):
    """Coefficients ``(slope, intercept)`` of the left-hand side for given ``a``."""
    M, rhs = _system(A1, A2, knots)
    r = M @ np.asarray(a, dtype=float) - rhs
    return float(r[0]), float(r[1])


def combination_coeffs(A, A1, A2, knots, tol=1e-9, signs=None):
    """Solve the two-equation identity with ``|a_i| <= (l0/l1)^2``.

    Parameters
    ----------
    A : sequence of int
        Consecutive index range ``j0..j0+l0`` containing ``A1`` and ``A2``.
    A1 : sequence of int
        ``2 l1`` indices carrying the unknowns.
    A2 : sequence of int
        ``l2`` indices of the ramps to cancel (may be empty).
    knots : array_like
        Knot values indexed by ``j``.
    signs : array_like, optional
        Per entry of ``A1``: ``+1`` forces ``a_i >= 0``, ``-1`` forces
        ``a_i <= 0``, ``0`` leaves it free.

    Returns
    -------
    ndarray
        ``a`` aligned with ``A1``.

    Raises
    ------
    ValueError
        If ``A1`` is empty or of odd size, or the sets are not inside ``A``.
    CombinationError
        If neither the minimum-norm nor the least-max-norm solution meets the bound.

    Examples
    --------
    >>> import numpy as np
    >>> x = np.cos(np.arange(6) * np.pi / 5)
    >>> np.round(combination_coeffs(range(1, 5), [1, 2], [1], x), 12) + 0.0
    array([-1.,  0.])
    """
    A = sorted(A)
    A1 = list(A1)
    A2 = list(A2)
    if not A1 or len(A1) % 2:
        raise ValueError("A1 must have a positive even number of indices")
    if len(set(A1)) != len(A1) or len(set(A2)) != len(A2):
        raise ValueError("index sets must not repeat")
    if not set(A1) <= set(A) or not set(A2) <= set(A):
        raise ValueError("A1 and A2 must lie in A")
    l0 = A[-1] - A[0]
    l1 = len(A1) // 2
    bound = (l0 / l1) ** 2
    if not A2:
        return np.zeros(len(A1))
    M, rhs = _system(A1, A2, knots)
    a = np.linalg.lstsq(M, rhs, rcond=None)[0]
    sg = np.zeros(len(A1)) if signs is None else np.asarray(signs, dtype=float)

    def ok(v):
        res = M @ v - rhs
        return (np.max(np.abs(res)) <= tol and np.max(np.abs(v)) <= bound * (1 + 1e-12)
                and np.all(sg * v >= -tol))

    if ok(a):
        return a
    # least-max-norm: minimise t subject to |a_i| <= t and M a = rhs
    m = len(A1)
    c = np.zeros(m + 1)
    c[-1] = 1.0
    eye = np.eye(m)
    A_ub = np.vstack([np.hstack([eye, -np.ones((m, 1))]), np.hstack([-eye, -np.ones((m, 1))])])
    b_ub = np.zeros(2 * m)
    A_eq = np.hstack([M, np.zeros((2, 1))])
    box = [(0, None) if v > 0 else (None, 0) if v < 0 else (None, None) for v in sg]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=rhs,
                  bounds=box + [(0, None)], method="highs")
    if res.status == 0:
        b = res.x[:m]
        # polish the equality residual inside the active face
        b = b + np.linalg.lstsq(M, rhs - M @ b, rcond=None)[0]
        if ok(b):
            return b
    raise CombinationError(
        f"no coefficients within bound {bound:.3g} (min-norm max {np.max(np.abs(a)):.3g})")
