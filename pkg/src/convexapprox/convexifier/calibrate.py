"""Numerical calibration of the absolute constants the engine branches on.

The constants are only known to exist; here they are measured on a fixed
corpus and frozen in ``calibrated.json`` (regenerate with
``python -m convexapprox.convexifier.calibrate``).
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..kernels import default_params
from ..smoothness import Majorant
from .classify import block_size_for
from .correcting import check_correcting_Q, correcting_Q

CALIBRATION_FILE = Path(__file__).with_name("calibrated.json")


def j_patterns(lo, hi):
    """The ``J`` shapes that occur downstream: block ends, one end, end pairs, plus a centre."""
    mid = (lo + hi) // 2
    pats = [[lo, hi], [lo], [hi], [lo, lo + 1], [hi - 1, hi], [lo, mid, hi]]
    return [sorted(set(p)) for p in pats]


def q_measurements(k, ns=(16, 32, 64, 128), sizes=(1, 2, 4), kappa=1.0):
    """Concavity, floor and envelope of ``Q`` over every aligned block and ``J`` pattern."""
    params = default_params(alpha=2 * (k - 2) + 2, k=k)
    phi = Majorant.power(k, k - 2)
    C3 = block_size_for(k)
    rows = []
    for n in ns:
        for s in sizes:
            m = C3 * s
            if m > n:
                continue
            for lo in range(1, n - m + 2, C3):
                hi = lo + m - 1
                for J in j_patterns(lo, hi):
                    Q = correcting_Q(n, (lo, hi), J, phi, params, kappa)
                    c = check_correcting_Q(Q, phi, k)
                    rows.append({"n": n, "E": [lo, hi], "J": J, "concavity": c.concavity,
                                 "floor": c.floor, "envelope": c.envelope,
                                 "min_outside": c.min_second_outside})
    return rows


def calibrate_q(k, **kw):
    """``kappa``: largest power of two with concavity at most 1/2; then ``C1`` and the envelope constant."""
    rows = q_measurements(k, **kw)
    worst = max(r["concavity"] for r in rows)
    kappa = 2.0 ** math.floor(math.log2(0.5 / worst)) if worst > 0 else 1.0
    C1 = 0.5 * kappa * min(r["floor"] for r in rows)
    C_env = 2.0 * kappa * max(r["envelope"] for r in rows)
    return {"kappa": kappa, "C1": C1, "C_Qu2": C_env, "worst_concavity_at_1": worst,
            "cases": len(rows)}


def calibrate_c2(k, functions, ns=(16, 32)):
    """Windowed second-derivative constant of the simultaneous approximant on a corpus.

    ``functions`` is a sequence of :class:`EvaluableFunction`; each spline is
    approximated with its whole second derivative treated as the big part.
    The result is the next power of two above the worst measured constant.
    """
    from ..smoothness import make_majorant_from
    from ..splines import fit_convex_spline
    from .classify import mask_second
    from .simultaneous import check_D, simultaneous_D
    r = k - 2
    params = default_params(alpha=2 * r + 2, k=k)
    C3 = block_size_for(k)
    worst = 0.0
    for f in functions:
        phi = make_majorant_from(f, r)
        if phi.degenerate:
            continue
        for n in ns:
            S = fit_convex_spline(f, r, n).spline
            S4 = mask_second(S, range(1, n + 1))
            res = simultaneous_D(S4, params)
            W = {"all": (1, n), "right": (1, n // 2), "left": (n // 2 + 1, n),
                 "mid": (n // 4, 3 * n // 4)}
            for q in range(n // C3):
                W[f"block{q + 1}"] = (q * C3 + 1, (q + 1) * C3)
            worst = max(worst, check_D(S4, res, phi, params.alpha, W).worst_window()[1])
    return {"C2": 2.0 ** math.ceil(math.log2(worst)), "C2_measured": worst}


def load_constants(k):
    """Frozen constants for ``k`` (raises ``KeyError`` if ``k`` was never calibrated)."""
    data = json.loads(CALIBRATION_FILE.read_text())
    return data[str(k)]


def main():
    from ..corpus import corpus
    out = {}
    funcs = [c.function for c in corpus().values()]
    for k in (4, 5):
        entry = calibrate_q(k)
        entry.update(calibrate_c2(k, funcs))
        out[str(k)] = entry
        print(k, entry, flush=True)
    CALIBRATION_FILE.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
