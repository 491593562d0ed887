"""Classification of the intervals of a convex spline by the size of ``S''``.

An interval is *under control* (UC) when ``S''`` at its witness (the grid
argmin of ``S''`` inside the interval) is at most ``5 C2 phi(rho)/rho^2``.
Blocks ``E_q`` of ``C3`` consecutive intervals are *good* when they contain at
least ``2k - 5`` UC intervals.  The union of the other blocks splits into
components ``F_p``; those with at most ``C4`` blocks are *almost good*
(AG), the rest form ``F``, where the big part of ``S`` lives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from ..piecewise import PiecewisePolynomial
from ..smoothness import b_functional
from .blocks import extend, runs


def block_size_for(k):
    """Smallest power of two that is at least ``2k``."""
    c = 1
    while c < 2 * k:
        c *= 2
    return c


def padded_n(n, C3):
    """``n`` rounded up to a multiple of ``C3``."""
    return -(-int(n) // C3) * C3


@dataclass
class ClassificationReport:
    n: int
    k: int
    C2: float
    C3: int
    C4: int
    uc_indices: set
    witnesses: dict
    good_blocks: set
    E: list
    components: list
    ag_flags: list
    F: list
    J_q: dict
    J: list
    J_plus: dict = field(default_factory=dict)
    J_minus: dict = field(default_factory=dict)
    F_plus: dict = field(default_factory=dict)
    F_minus: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def n_blocks(self):
        return self.n // self.C3

    def block(self, q):
        """Interval range ``(lo, hi)`` of ``E_q``."""
        return (q - 1) * self.C3 + 1, q * self.C3

    @property
    def F_components(self):
        return [c for c, ag in zip(self.components, self.ag_flags) if not ag]

    @property
    def F_blocks(self):
        """Blocks ``E_q`` contained in ``F``."""
        Fs = set(self.F)
        return [q for q in range(1, self.n_blocks + 1) if set(range(*self._span(q))) <= Fs]

    def _span(self, q):
        lo, hi = self.block(q)
        return lo, hi + 1

    @property
    def J_star(self):
        out = set()
        for d in (self.J_plus, self.J_minus):
            for v in d.values():
                out |= set(v)
        return sorted(out)

    def to_dict(self):
        return {
            "n": self.n, "k": self.k, "C2": self.C2, "C3": self.C3, "C4": self.C4,
            "uc": sorted(self.uc_indices), "good_blocks": sorted(self.good_blocks),
            "E": self.E, "components": [list(c) for c in self.components],
            "ag": self.ag_flags, "F": self.F, "J": self.J, "J_star": self.J_star,
            "F_plus": {str(k): list(v) for k, v in self.F_plus.items()},
            "F_minus": {str(k): list(v) for k, v in self.F_minus.items()},
            "flags": self.flags,
        }


def uc_witnesses(S: PiecewisePolynomial, points=64):
    """Witness ``x_j*`` (grid argmin of ``S''``) and ``S''`` there, per interval."""
    d2 = S.derivative(2)
    x = S.interior_grid(points)
    n = S.n
    vals = np.array([d2.eval_piece(j, x[j - 1]) for j in range(1, n + 1)])
    i = np.argmin(vals, axis=1)
    w = x[np.arange(n), i]
    return w, vals[np.arange(n), i]


def mask_second(S: PiecewisePolynomial, intervals, value_at_minus1=0.0, slope_at_minus1=0.0):
    """Double antiderivative from -1 of ``S''`` restricted to ``intervals``."""
    d2 = S.derivative(2)
    keep = np.zeros(S.n, dtype=bool)
    keep[np.asarray(sorted(intervals), dtype=int) - 1] = True
    masked = PiecewisePolynomial(S.partition, d2.coeffs * keep[:, None])
    first = masked.antiderivative(slope_at_minus1)
    return first.antiderivative(value_at_minus1)


def classify(S: PiecewisePolynomial, phi, C2, k, C3=None, C4=None, points=64):
    """Classify the intervals of ``S`` and assemble every derived index set.

    Parameters
    ----------
    S : PiecewisePolynomial
        Convex C1 spline; ``S.n`` must be a multiple of ``C3``.
    phi : callable
    C2 : float
        Threshold factor of the UC test.
    k : int
    C3 : int, optional
        Block size; defaults to :func:`block_size_for`.
    C4 : int, optional
        AG size limit; measured as ``ceil(b_k(S_2, phi))`` (at least 1) when omitted.
    """
    p = S.partition
    n = S.n
    C3 = block_size_for(k) if C3 is None else int(C3)
    if n % C3:
        raise ValueError(f"n={n} is not a multiple of the block size {C3}")
    w, s2 = uc_witnesses(S, points)
    rho = p.rho(w)
    thr = 5.0 * C2 * phi(rho) / rho**2
    uc = {j + 1 for j in np.nonzero(s2 <= thr)[0]}
    witnesses = {j + 1: float(w[j]) for j in range(n)}
    nb = n // C3
    good = {q for q in range(1, nb + 1)
            if sum(1 for j in range((q - 1) * C3 + 1, q * C3 + 1) if j in uc) >= 2 * k - 5}
    E = [j for q in range(1, nb + 1) if q not in good for j in range((q - 1) * C3 + 1, q * C3 + 1)]
    comps = runs(E)
    flags = []
    if C4 is None:
        if E:
            S2 = mask_second(S, E)
            C4 = max(1, int(ceil(b_functional(S2, phi, k).total - 1e-12)))
        else:
            C4 = 1
    ag = [(hi - lo + 1) // C3 <= C4 for lo, hi in comps]
    F = [j for (lo, hi), a in zip(comps, ag) if not a for j in range(lo, hi + 1)]
    Fs = set(F)
    J_q = {}
    for q in range(1, nb + 1):
        lo, hi = (q - 1) * C3 + 1, q * C3
        if set(range(lo, hi + 1)) <= Fs:
            J_q[q] = sorted({j for j in range(lo, hi + 1) if j in uc} | {lo, hi})
    J = sorted(set().union(*J_q.values())) if J_q else []
    rep = ClassificationReport(n, k, float(C2), C3, int(C4), uc, witnesses, good, E, comps,
                               ag, F, J_q, J, flags=flags)
    width = C3 * rep.C4
    for pidx, ((lo, hi), a) in enumerate(zip(comps, ag)):
        if a:
            continue
        elo, ehi = extend(n, (lo, hi))
        # right end of F_p (towards +1) and left end (towards -1)
        rep.J_plus[pidx] = [1] if lo == 1 else sorted({elo, lo})
        rep.J_minus[pidx] = [n] if hi == n else sorted({ehi, hi})
        size = min(width, ehi - elo + 1)
        if size < width:
            flags.append("F_p^e shorter than C3*C4")
        rep.F_plus[pidx] = (elo, elo + size - 1)
        rep.F_minus[pidx] = (ehi - size + 1, ehi)
    return rep
