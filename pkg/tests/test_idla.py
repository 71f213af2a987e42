import math

import numpy as np
import pytest
from scipy import stats

from growing_walks.geometry import IsolatedVertex
from growing_walks.idla import (
    Intensity,
    grow,
    j_random,
    j_random_steps,
    kappa_d,
    sequential_idla,
    shape_deviation,
    srw_on_idla,
    u_comparison_holds,
    u_solver,
)


def test_kappa():
    assert abs(kappa_d(3) - (3 / (4 * math.pi)) ** (1 / 3)) < 1e-15
    assert abs(kappa_d(2) - 1 / math.sqrt(math.pi)) < 1e-15


def test_first_site_is_origin_second_is_neighbour():
    for s in range(50):
        tl = grow(Intensity.const(1.0), 1.0, 1e9, s, max_settled=2)
        assert tuple(tl.sites[0]) == (0, 0, 0)
        assert np.abs(tl.sites[1]).sum() == 1


def test_second_site_uniform():
    counts = np.zeros(6, dtype=int)
    dirs = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -1, 0), (0, 0, -1)]
    for s in range(1200):
        tl = grow(Intensity.const(1.0), 1.0, 1e9, 10_000 + s, max_settled=2)
        counts[dirs.index(tuple(int(v) for v in tl.sites[1]))] += 1
    assert stats.chisquare(counts).pvalue > 0.001


def test_settled_never_exceeds_injected():
    tl = grow(Intensity.power(3.0, 2.0), 1.0, 30.0, 4)
    assert tl.mt_le_nt()
    assert np.all(np.diff(tl.settle_times) >= 0)
    assert len({tuple(s) for s in tl.sites}) == len(tl.sites)


def test_fast_walkers_settle_immediately():
    tl = grow(Intensity.const(1.0), 1e6, 100.0, 2)
    assert tl.M(100.0) == tl.N(100.0)


def test_timeline_is_deterministic():
    a = grow(Intensity.const(2.0), 1.0, 50.0, 8)
    b = grow(Intensity.const(2.0), 1.0, 50.0, 8)
    assert np.array_equal(a.sites, b.sites) and np.array_equal(a.settle_times, b.settle_times)


def test_sequential_cluster_is_roughly_round():
    sd = shape_deviation(sequential_idla(2000, 3, seed=1))
    assert sd["M"] == 2000
    assert 0.7 < sd["inner_ratio"] <= 1.0 <= sd["outer_ratio"] < 1.35


def test_intensity_validation():
    with pytest.raises(ValueError):
        Intensity.const(0.0)
    with pytest.raises(ValueError):
        Intensity.table([0, 1], [0, 0])
    it = Intensity.power(3.0, 2.0)
    assert it.cumulative_at(2.0) == 8.0


def test_j_random_steps():
    assert j_random_steps([0.0], [1.0], 2.0) == (1.0, False)
    v, floored = j_random_steps([0.0, 3.0], [1.0, 8.0], 5.0)
    assert abs(v - (2.0 + 2.0 / 8.0)) < 1e-12 and not floored


def test_j_random_of_a_timeline_is_finite():
    tl = grow(Intensity.power(3.0, 2.0), 1.0, 30.0, 4)
    v, _ = j_random(tl, 30.0)
    assert 0 < v < math.inf


def test_u_solver():
    u = u_solver(lambda t: t, 1.0, 3, 10.0)
    assert abs(u + u ** (2 / 3) - 10.0) < 1e-9
    assert u_solver(lambda t: t, 0.0, 3, 10.0) == 10.0
    assert u_comparison_holds(lambda t: t**2, 1.0, 3, np.linspace(1, 50, 50)).all()
    with pytest.raises(ValueError):
        u_solver(lambda t: 0.0, 1.0, 3, 1.0)


def test_walk_on_cluster_starts_once_origin_has_a_neighbour():
    tl = grow(Intensity.power(3.0, 2.0), 1.0, 100.0, 4)
    log = srw_on_idla(tl, (0, 0, 0), 20_000, seed=1)
    assert log.n_visits >= 1
    with pytest.raises(IsolatedVertex):
        srw_on_idla(tl, (0, 0, 0), 100, seed=1, start_time=tl.settle_times[0])
