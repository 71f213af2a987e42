import numpy as np
import pytest

from growing_walks.stats import ks_distance, median_ci, tail_fit, wilson


def test_exponential_tail_slope():
    s = np.random.default_rng(1).exponential(1.0, 20_000)
    f = tail_fit(s, np.linspace(0.5, 5, 10))
    assert abs(f.slope + 1) < 0.05 and f.r2 > 0.99 and f.exponential


def test_pareto_tail_flagged():
    s = np.random.default_rng(2).pareto(1.0, 20_000) + 1
    f = tail_fit(s, np.geomspace(1, 1000, 12))
    assert f.r2 < 0.9 and not f.exponential


def test_tail_fit_errors():
    with pytest.raises(ValueError):
        tail_fit(np.ones(10), [1, 2, 3])
    with pytest.raises(ValueError):
        tail_fit(np.zeros(2000), [1, 2, 3])


def test_wilson_properties():
    e = wilson(0, 100)
    assert e.value == 0 and e.lo == 0 and e.hi > 0
    e = wilson(50, 100)
    assert e.lo < 0.5 < e.hi and abs(e.half_width - (e.hi - e.lo) / 2) < 1e-15


def test_median_ci_contains_median():
    x = np.arange(101)
    m, lo, hi = median_ci(x)
    assert m == 50 and lo < 50 < hi


def test_ks_same_law():
    rng = np.random.default_rng(3)
    _, p = ks_distance(rng.normal(size=2000), rng.normal(size=2000))
    assert p > 0.001
