import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convexapprox.partition import build_partition, endpoint_weight
from convexapprox.partition_facts import EXPLICIT_FACTS, fact_grid, verify_partition_facts


@pytest.mark.parametrize("n", [1, 2, 3, 8, 33])
def test_knots_are_cosines(n):
    p = build_partition(n)
    j = np.arange(n + 1)
    assert np.allclose(p.knots, np.cos(j * np.pi / n), atol=1e-15)
    assert np.all(np.diff(p.knots) < 0)
    assert np.isclose(p.h.sum(), 2.0)
    # symmetric about 0
    assert np.allclose(p.h, p.h[::-1])


def test_out_of_range_knot_convention():
    p = build_partition(4)
    assert p.knot(-3) == 1.0 and p.knot(7) == -1.0
    assert p.length(0) == 0.0 and p.length(5) == 0.0


def test_interval_index_at_knots_and_ends():
    p = build_partition(6)
    assert p.interval_index(1.0) == 1
    assert p.interval_index(-1.0) == 6
    # a knot belongs to the interval it is the left end of
    assert p.interval_index(p.knots[2]) == 2
    with pytest.raises(ValueError):
        p.interval_index(1.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 300), st.floats(-1, 1))
def test_interval_index_contains_point(n, x):
    p = build_partition(n)
    j = p.interval_index(x)
    lo, hi = p.interval(j)
    assert lo <= x <= hi


@given(st.floats(-1, 1))
def test_scales_match_formulas(x):
    p = build_partition(16)
    phi = np.sqrt(max(0.0, 1 - x * x))
    assert np.isclose(p.rho(x), phi / 16 + 1 / 256, rtol=1e-12, atol=1e-15)
    assert np.isclose(p.delta(x), min(1.0, 16 * phi), rtol=1e-12, atol=1e-15)


def test_endpoint_weight_accurate_near_one():
    x = 1 - 1e-12
    assert np.isclose(endpoint_weight(x), np.sqrt(2e-12), rtol=1e-4)


def test_fact_grid_includes_knots():
    g = fact_grid(200, n=8)
    assert np.all(np.isin(build_partition(8).knots, g))
    assert g[0] == -1.0 and g[-1] == 1.0


@pytest.mark.parametrize("n", [1, 4, 16])
def test_explicit_facts_hold(n):
    reports = verify_partition_facts(n, grid_size=2000, pair_grid_size=300)
    ids = {r.fact_id for r in reports}
    assert set(EXPLICIT_FACTS) <= ids
    for r in reports:
        if r.fact_id in EXPLICIT_FACTS:
            assert r.passed, r
        else:
            assert np.isfinite(r.measured_constant)


def test_grid_size_validated():
    with pytest.raises(ValueError):
        verify_partition_facts(4, grid_size=10)
