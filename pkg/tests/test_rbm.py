import math
import warnings

import numpy as np
import pytest

from growing_walks.geometry import GrowingDomain, StarDomain
from growing_walks.oracle import excursion_frequency
from growing_walks.rbm import (
    DiffusionConfig,
    Trajectory,
    apply_jump,
    ball_hitting_curve,
    excursion_cycle_counts,
    excursion_decomposition,
    first_passage_times,
    reflected_step,
    rescaled_step,
    run_rbmg,
    sigma_zero,
)
from growing_walks.scale import ScaleFunction


def dom(shape=None, f=None):
    return GrowingDomain(shape or StarDomain.ball(1.0), f or ScaleFunction.constant(1.0), mode="continuum")


def test_config_validation():
    with pytest.raises(ValueError):
        DiffusionConfig(GrowingDomain(StarDomain.ball(1.0), ScaleFunction.constant(1.0)), 1.0)
    with pytest.raises(ValueError):
        DiffusionConfig(dom(), 1.0, scheme="other")
    with pytest.raises(ValueError):
        DiffusionConfig(dom(), 1.0, epsilon=2.0)


def test_reflected_step_stays_inside():
    cfg = DiffusionConfig(dom(), 1.0, dt=1e-3)
    y = reflected_step([0.9, 0, 0], 0.0, [0.3, 0, 0], cfg)
    assert np.linalg.norm(y) <= 1.0 + 1e-12
    assert abs(y[0] - 0.8) < 1e-12


def test_rescaled_step_and_jump():
    cfg = DiffusionConfig(dom(f=ScaleFunction.power(1.0, 0.5)), 1.0, dt=1e-3, scheme="rescaled")
    y = rescaled_step([0.0, 0.0, 0.0], 0.0, [0.01, 0, 0], cfg)
    assert abs(y[0] - 0.01) < 1e-12
    assert np.allclose(apply_jump([1.0, 2.0], 0.5), [0.5, 1.0])
    with pytest.raises(ValueError):
        apply_jump([1.0], 1.5)


def test_confinement_band_on_ellipsoid():
    shape = StarDomain.ellipsoid([1.0, 0.7, 1.3])
    cfg = DiffusionConfig(dom(shape, ScaleFunction.power(1.0, 0.5)), 5.0, dt=1e-4, epsilon=0.1, seed=3)
    traj, log = run_rbmg(cfg, record_every=1, rec_cap=60_000)
    assert not log.invalid
    band = 2 * math.sqrt(1e-4 * 3)
    for t, x in zip(traj.times[::50], traj.positions[::50]):
        s = (1.0 + t) ** 0.5
        r = np.linalg.norm(x)
        if r > 0:
            assert r <= shape.radius(x / r) * s + band


def test_excursion_rate_on_frozen_ball():
    cfg = DiffusionConfig(dom(), 100.0, dt=1e-4, epsilon=0.1, outer=0.5, seed=1)
    n = [run_rbmg(cfg, replica=r)[1].n_tau for r in range(4)]
    rate = np.mean(n) / 100.0
    assert abs(rate - excursion_frequency(0.1, 1.0, 3)) / excursion_frequency(0.1, 1.0, 3) < 0.15


def test_run_is_reproducible():
    cfg = DiffusionConfig(dom(f=ScaleFunction.power(1.0, 0.5)), 20.0, seed=7)
    a = run_rbmg(cfg, replica=2, checkpoints=[5, 10, 20])[1]
    b = run_rbmg(cfg, replica=2, checkpoints=[5, 10, 20])[1]
    assert np.array_equal(a.tau_times, b.tau_times) and np.array_equal(a.counts_at, b.counts_at)
    assert np.all(np.diff(a.counts_at) >= 0)


def test_rescaled_warns_outside_energy_condition():
    cfg = DiffusionConfig(dom(f=ScaleFunction.power(1.0, 0.75)), 0.01, scheme="rescaled", seed=1)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        run_rbmg(cfg)
    assert any("diverges" in str(x.message) for x in w)


def test_sigma_zero():
    assert sigma_zero(ScaleFunction.power(1.0, 0.5), 1.0, 0.1) == 0.0
    assert abs(sigma_zero(ScaleFunction.power(0.01, 0.5), 1.0, 0.2) - (0.04 - 0.01)) < 1e-12
    assert sigma_zero(ScaleFunction.piecewise([0.05, 1.0], [0.0, 3.0]), 1.0, 0.1) == 3.0


def test_excursion_decomposition_examples():
    a = 1.0
    traj = Trajectory(np.arange(5.0), np.array([[0, 0, 0], [1.0, 0, 0], [0.4, 0, 0], [0.2, 0, 0], [0.1, 0, 0]]))
    rec = excursion_decomposition(traj, a)
    assert list(rec.tau) == [1.0] and list(rec.sigma) == [0.0, 2.0] and not rec.open_tail
    none = excursion_decomposition(Trajectory(np.arange(3.0), np.zeros((3, 3))), a)
    assert none.tau.size == 0


def test_geometric_cycle_mean_small_sample():
    c = excursion_cycle_counts(4.0, 0.5, 3, 300, seed=2)
    assert np.all(c >= 1)
    target = 1 / ((2.0**-1 - 4.0**-1) / (0.5**-1 - 4.0**-1))
    assert abs(c.mean() - target) / target < 0.25


def test_exit_time_from_unit_ball():
    t, st = first_passage_times(dom(StarDomain.ball(2.0)), np.zeros((2000, 3)), "exit", 1.0, 50.0, seed=3, dt=1e-4)
    assert np.all(st == 1)
    assert abs(t.mean() - 1 / 3) < 0.03


def test_ball_hitting_curve_limits():
    est = ball_hitting_curve(4.0, 0.5, [0.0, 2000.0], 200, seed=1, dt=4e-3)
    assert est[0].value == 0.0
    assert est[1].value > 0.95
