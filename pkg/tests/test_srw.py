import math

import numpy as np
import pytest
from scipy import stats

from growing_walks.geometry import FrozenLattice, GrowingDomain, IsolatedVertex, StarDomain
from growing_walks.oracle import discrete_hit_solve, stationary_distribution
from growing_walks.rng import CounterStream
from growing_walks.scale import ScaleFunction
from growing_walks.srw import (
    WalkState,
    exit_time_samples,
    hit_origin_probability,
    run_walk,
    step,
    walk_counts,
)


def frozen(shape, s=1.0):
    return GrowingDomain(shape, ScaleFunction.constant(s))


def test_horizon_zero_records_start_only():
    dom = frozen(StarDomain.ball(3.0))
    assert list(run_walk(dom, (0, 0, 0), (0, 0, 0), 0, seed=1).visit_times) == [0]
    assert list(run_walk(dom, (1, 0, 0), (0, 0, 0), 0, seed=1).visit_times) == []


def test_seven_point_stationary_mass(seven_point):
    # centre has degree 6, each leaf degree 1: mass 6/12 at the origin
    lat = FrozenLattice.build(seven_point, 1.0, enforce_b2=False)
    pi = stationary_distribution(lat)
    assert abs(pi[lat.index((0, 0, 0))] - 0.5) < 1e-15
    log = run_walk(frozen(seven_point), (0, 0, 0), (0, 0, 0), 10_000, seed=4)
    # visits at every even step exactly: the walk alternates centre and leaf
    assert log.n_visits == 5001


def test_interior_step_uniform_over_six_neighbours():
    dom = frozen(StarDomain.ball(5.0))
    counts = {}
    for i in range(6000):
        s = step(WalkState(np.zeros(3, dtype=np.int64), 0, CounterStream(11, i)), dom)
        counts[tuple(s.position)] = counts.get(tuple(s.position), 0) + 1
    assert len(counts) == 6
    assert stats.chisquare(list(counts.values())).pvalue > 0.001


def test_boundary_vertex_with_three_neighbours():
    # (1,1,0) in B_1.5: neighbours (0,1,0), (1,0,0), (1,1,0)+-e3 are outside (norm sqrt 3)
    dom = frozen(StarDomain.ball(1.5))
    seen = set()
    for i in range(300):
        s = step(WalkState(np.array([1, 1, 0]), 0, CounterStream(2, i)), dom)
        seen.add(tuple(s.position))
    assert seen == {(0, 1, 0), (1, 0, 0)}


def test_walk_is_reproducible_and_parity_respected():
    dom = GrowingDomain(StarDomain.ball(1.0), ScaleFunction.power(1.0, 0.5), enforce_b2=True)
    a = run_walk(dom, (0, 0, 0), (0, 0, 0), 50_000, seed=9, replica=3)
    b = run_walk(dom, (0, 0, 0), (0, 0, 0), 50_000, seed=9, replica=3)
    assert np.array_equal(a.visit_times, b.visit_times)
    assert np.all(np.asarray(a.visit_times) % 2 == 0)
    c = run_walk(dom, (0, 0, 0), (1, 1, 0), 50_000, seed=9, replica=3)
    assert np.all(np.asarray(c.visit_times) % 2 == 0)


def test_checkpoint_counts_match_full_log():
    dom = GrowingDomain(StarDomain.ball(1.0), ScaleFunction.power(4.0, 0.3), enforce_b2=True)
    hz = [1000, 10_000, 100_000]
    w = walk_counts(dom, (0, 0, 0), [(0, 0, 0), (2, 0, 0)], hz, seed=5, replica=1)
    log = run_walk(dom, (0, 0, 0), (0, 0, 0), hz[-1], seed=5, replica=1)
    vt = np.asarray(log.visit_times)
    for k, h in enumerate(hz):
        assert w.counts[0, k] == np.sum(vt <= h)
        assert w.last_visit[0, k] == (vt[vt <= h].max() if np.any(vt <= h) else -1)
    assert np.all(np.diff(w.counts, axis=1) >= 0)


def test_isolated_start_flags_replica():
    dom = frozen(StarDomain.ball(0.5))
    with pytest.raises(IsolatedVertex):
        run_walk(dom, (0, 0, 0), (0, 0, 0), 10, seed=1, strict=True)
    assert run_walk(dom, (0, 0, 0), (0, 0, 0), 10, seed=1).isolated


def test_hit_probability_trivial_cases(ball):
    assert hit_origin_probability(ball, 6, (3, 0, 0), 0, 100, seed=1).value == 0.0
    with pytest.raises(ValueError):
        hit_origin_probability(ball, 6, (40, 0, 0), 10, 10, seed=1)


def test_exit_time_mean_matches_linear_solve(ball):
    a = 10
    sol = discrete_hit_solve(ball, a, mode="exit_time", exit_radius=a)
    exact = sol.at((0, 0, 0)) / a**2
    s = exit_time_samples(ball, a, (0, 0, 0), 5000, seed=2)
    assert np.all(np.isfinite(s))
    assert abs(s.mean() - exact) / exact < 0.15


def test_exit_time_requires_room(ball):
    with pytest.raises(ValueError):
        exit_time_samples(ball, 3, (0, 0, 0), 10, seed=1, enforce_b2=False)
