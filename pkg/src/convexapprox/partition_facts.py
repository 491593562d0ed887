"""Grid checks of the inequality catalogue for Chebyshev partitions.

Facts with explicit constants are reported pass/fail.  Facts that only assert
the existence of some constant report the smallest constant consistent with
the grid (a measured supremum), with ``passed`` meaning "finite".
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .partition import ChebPartition, build_partition, endpoint_weight


@dataclass
class FactReport:
    """Outcome of one fact on one partition."""

    fact_id: str
    n: int
    measured_constant: float
    passed: bool
    explicit_constant: float | None = None
    skipped: bool = False
    note: str = ""

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        if d["explicit_constant"] is None:
            del d["explicit_constant"]
        return d


def fact_grid(size, n=None):
    """Union of first-kind Chebyshev points, a uniform grid, the endpoints and the knots.

    Both base grids have an even number of points, so the centre 0 is only
    present when it is a knot.
    """
    m = max(size // 2, 2)
    m += m % 2
    theta = (2 * np.arange(m) + 1) * np.pi / (2 * m)
    parts = [np.cos(theta), np.linspace(-1.0, 1.0, m), [-1.0, 1.0]]
    if n is not None:
        parts.append(build_partition(n).knots)
    return np.unique(np.concatenate(parts))


def _subgrid(x, size):
    if x.size <= size:
        return x
    idx = np.unique(np.linspace(0, x.size - 1, size).round().astype(int))
    return x[idx]


def _strict_ratio(lhs, rhs):
    """Largest ``lhs/rhs`` with ``rhs > 0``; ``inf`` if some ``lhs >= rhs == 0``."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    pos = rhs > 0
    worst = np.max(lhs[pos] / rhs[pos]) if np.any(pos) else 0.0
    if np.any(~pos & (lhs >= rhs)):
        return np.inf
    return float(worst)


def _containing_intervals(p: ChebPartition, x):
    """Pairs (point index, interval index) with the point in the closed interval."""
    j = p.interval_index(x)
    pts = [np.arange(x.size)]
    js = [j]
    # a knot x_j also belongs to I_{j+1}
    on_knot = (j < p.n) & (x == p.knots[np.minimum(j, p.n)])
    pts.append(np.nonzero(on_knot)[0])
    js.append(j[on_knot] + 1)
    return np.concatenate(pts), np.concatenate(js)


def check_interval_scale(p, x):
    i, j = _containing_intervals(p, x)
    rho = p.rho(x[i])
    h = p.length(j)
    lower = endpoint_weight(x[i]) / p.n
    ok = bool(np.all(lower < rho) and np.all(rho < h) and np.all(h < 5 * rho))
    return FactReport("interval_length_vs_scale", p.n, float(np.max(h / rho)), ok, 5.0)


def check_neighbor_lengths(p, x):
    if p.n < 2:
        return FactReport("neighbor_lengths", p.n, 0.0, True, 3.0, skipped=True,
                          note="single interval: no neighbours")
    h = p.h
    ratio = np.maximum(h[1:] / h[:-1], h[:-1] / h[1:])
    return FactReport("neighbor_lengths", p.n, float(ratio.max()), bool(np.all(ratio < 3)), 3.0)


def check_scale_square(p, xs, ys):
    """rho(y)^2 < 4 rho(x) (|x - y| + rho(x)) over all pairs."""
    rx = p.rho(xs)[:, None]
    ry = p.rho(ys)[None, :]
    d = np.abs(xs[:, None] - ys[None, :])
    ratio = ry**2 / (rx * (d + rx))
    c = float(ratio.max())
    return FactReport("scale_square_pairs", p.n, c, c < 4.0, 4.0)


def check_scale_shift(p, xs, ys):
    """(|x-y|+rho(x))/2 < |x-y|+rho(y) < 2(|x-y|+rho(x)) over all pairs."""
    rx = p.rho(xs)[:, None]
    ry = p.rho(ys)[None, :]
    d = np.abs(xs[:, None] - ys[None, :])
    ratio = (d + ry) / (d + rx)
    c = float(max(ratio.max(), 1.0 / ratio.min()))
    return FactReport("scale_shift_pairs", p.n, c, c < 2.0, 2.0)


def check_scale_below_knot_distance(p, x):
    """rho(x) <= |x - x_j| for x outside the two intervals adjacent to x_j.

    For ``j = 0`` and ``j = n`` the excluded neighbourhood is taken closed at
    the domain endpoint, since the point ``x = x_j = +-1`` itself would make
    the inequality read ``n^-2 <= 0``.
    """
    worst = 0.0
    ok = True
    rho = p.rho(x)
    for j in range(p.n + 1):
        lo, hi = p.knot(j + 1), p.knot(j - 1)
        outside = (x <= lo) | (x >= hi)
        if j == 0:
            outside = x <= lo
        if j == p.n:
            outside = x >= hi
        if not np.any(outside):
            continue
        d = np.abs(x[outside] - p.knots[j])
        r = rho[outside]
        ok &= bool(np.all(r <= d))
        worst = max(worst, float(np.max(r / np.maximum(d, 1e-300))))
    return FactReport("scale_below_knot_distance", p.n, worst, ok, 1.0,
                      note="neighbourhood of x_0 and x_n closed at the endpoint")


def check_delta(p, x):
    """delta <= n phi < pi delta near the ends, delta = 1 in the middle.

    The strict inequality is checked where ``phi > 0``; at ``x = +-1`` both
    sides vanish.
    """
    phi = endpoint_weight(x)
    d = p.delta(x)
    lo, hi = p.knot(p.n - 1), p.knot(1)
    ends = (x <= lo) | (x >= hi)
    mid = (x >= lo) & (x <= hi)
    ok = bool(np.all(d[ends] <= p.n * phi[ends] * (1 + 1e-15)))
    live = ends & (phi > 0)
    ok &= bool(np.all(p.n * phi[live] < np.pi * d[live]))
    ok &= bool(np.all(d[mid] == 1.0)) if p.n > 1 else True
    c = float(np.max(p.n * phi[live] / d[live])) if np.any(live) else 0.0
    return FactReport("delta_vs_weight", p.n, c, ok, float(np.pi),
                      note="strict part checked where phi > 0")


def check_scale_vs_length(p, x):
    """rho(x)^2 < 8 h_j (|x - x_j| + rho(x)) for every j."""
    j = np.arange(1, p.n + 1)[None, :]
    rho = p.rho(x)[:, None]
    rhs = p.length(j) * (np.abs(x[:, None] - p.knot(j)) + rho)
    c = float(np.max(rho**2 / rhs))
    return FactReport("scale_vs_length", p.n, c, c < 8.0, 8.0)


def _measured(fid, n, c, note=""):
    return FactReport(fid, n, float(c), bool(np.isfinite(c)), None, note=note)


def measure_facts(p, x):
    """Measured constants for the facts without explicit constants."""
    j = np.arange(1, p.n + 1)[None, :]
    X = x[:, None]
    rho = p.rho(x)[:, None]
    dknot = np.abs(X - p.knot(j))
    dist = p.dist_to_interval(j, X)
    psi = p.psi(j, X)
    h = p.length(j)
    delta = p.delta(x)[:, None]
    out = []
    out.append(_measured("scale_ratio_vs_psi", p.n, np.max((rho / (rho + dknot)) ** 2 / psi)))
    r = (rho + dknot) / (rho + dist)
    out.append(_measured("knot_distance_vs_interval_distance", p.n, max(r.max(), 1 / r.min()),
                         note="two-sided equivalence constant"))
    out.append(_measured("sum_psi_squared", p.n, np.max(np.sum(psi**2, axis=1))))
    out.append(_measured("sum_scale_ratio_fourth", p.n,
                         np.max(np.sum((rho / (rho + dist)) ** 4, axis=1))))
    inner = endpoint_weight(x) > 0
    w = ((1 - X) * (1 + X)) / ((1 + p.knot(j - 1)) * (1 - p.knot(j)))
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = (psi**2 * delta**2 / w)[inner]
        hi = (w * psi**2 / delta**2)[inner]
    out.append(_measured("weight_ratio_bounds", p.n, max(lo.max(), hi.max()),
                         note="max of the two one-sided constants, phi > 0 only"))
    out.append(_measured("length_vs_scale_psi", p.n,
                         max(np.max(psi**2 * rho / h), np.max(h * psi / rho))))
    cs = []
    for k in (1, 2):
        a = psi ** (2 * k) * rho**k / h**k
        b = h**k * psi**k / rho**k
        cs.append(max(a.max(), b.max()))
    out.append(_measured("majorant_length_vs_scale", p.n, max(cs),
                         note="majorants t and t^2"))
    return out


def verify_partition_facts(n, grid_size=10_000, pair_grid_size=1500):
    """Evaluate the whole catalogue for partition size ``n``.

    Parameters
    ----------
    n : int
    grid_size : int
        Size of the point grid, at least 100.
    pair_grid_size : int
        Size of the subgrid used for the two-point facts.

    Returns
    -------
    list of FactReport
    """
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    p = build_partition(n)
    x = fact_grid(grid_size, n)
    xs = _subgrid(x, pair_grid_size)
    reports = [
        check_interval_scale(p, x),
        check_neighbor_lengths(p, x),
        check_scale_square(p, xs, xs),
        check_scale_shift(p, xs, xs),
        check_scale_below_knot_distance(p, x),
        check_delta(p, x),
        check_scale_vs_length(p, x),
    ]
    reports.extend(measure_facts(p, x))
    return reports


EXPLICIT_FACTS = (
    "interval_length_vs_scale",
    "neighbor_lengths",
    "scale_square_pairs",
    "scale_shift_pairs",
    "scale_below_knot_distance",
    "delta_vs_weight",
    "scale_vs_length",
)
