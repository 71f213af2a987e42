import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growing_walks.geometry import StarDomain
from growing_walks.oracle import (
    SingularSystem,
    continuous_hit_prob,
    discrete_hit_solve,
    excursion_frequency,
    excursion_rate,
    finite_horizon_hit,
    mean_exit_time_ball,
    mean_hit_time_reflected_ball,
)

BALL = StarDomain.ball(1.0, 3)


def test_one_ninth():
    assert abs(continuous_hit_prob(5, 1, 10, 3) - 1 / 9) <= 1e-12
    assert excursion_rate(10, 1, 3) == continuous_hit_prob(5, 1, 10, 3)


@given(st.floats(0.1, 5), st.floats(1.1, 10), st.integers(3, 7))
@settings(max_examples=50, deadline=None)
def test_boundary_values_exact(eps, ratio, d):
    a = eps * ratio
    assert continuous_hit_prob(eps, eps, a, d) == 1.0
    assert continuous_hit_prob(a, eps, a, d) == 0.0


@given(st.floats(0.1, 1), st.floats(0.01, 0.99), st.integers(3, 6))
@settings(max_examples=50, deadline=None)
def test_potential_is_radially_harmonic(eps, frac, d):
    a = 10 * eps
    r = eps + frac * (a - eps)
    h = 1e-4 * r
    f = lambda x: continuous_hit_prob(x, eps, a, d)
    lap = (f(r + h) - 2 * f(r) + f(r - h)) / h**2 + (d - 1) / r * (f(r + h) - f(r - h)) / (2 * h)
    assert abs(lap) < 1e-3 / eps**2


def test_closed_form_domain_errors():
    with pytest.raises(ValueError):
        continuous_hit_prob(0.5, 1, 10, 3)
    with pytest.raises(ValueError):
        continuous_hit_prob(5, 1, 10, 2)


def test_ball_mean_times():
    assert mean_exit_time_ball(0, 1, 3) == 1 / 3
    assert mean_hit_time_reflected_ball(0.1, 0.1, 1, 3) == 0.0
    # exact rate of eps -> 1/2 -> eps cycles in B_1: 3/16
    assert abs(excursion_frequency(0.1, 1.0, 3) - 0.1875) < 1e-12


def test_frozen_hit_value_and_methods_agree():
    h = discrete_hit_solve(BALL, 12, (0, 0, 0), exit_radius=12)
    assert h.residual < 1e-12
    assert abs(h.at((6, 0, 0)) - 0.0279110338) < 1e-9
    cg = discrete_hit_solve(BALL, 12, (0, 0, 0), exit_radius=12, method="cg")
    assert abs(cg.at((6, 0, 0)) - h.at((6, 0, 0))) < 1e-8
    small = [discrete_hit_solve(BALL, 2, (0, 0, 0), exit_radius=2, method=m).at((1, 0, 0))
             for m in ("direct", "iterate")]
    assert abs(small[0] - small[1]) < 1e-8


def test_symmetry_of_solution():
    h = discrete_hit_solve(BALL, 8, (0, 0, 0), exit_radius=8)
    for p in [(0, 3, 0), (0, 0, -3), (-3, 0, 0)]:
        assert abs(h.at(p) - h.at((3, 0, 0))) < 1e-12


def test_decay_like_inverse_distance():
    vals = [discrete_hit_solve(BALL, a, (0, 0, 0), exit_radius=a).at((a // 2, 0, 0)) * a for a in (8, 12, 16)]
    assert max(vals) / min(vals) < 1.2


def test_finite_horizon_converges_to_solve():
    T = int(50 * 12**2 * math.log(12))
    fh = finite_horizon_hit(BALL, 12, (0, 0, 0), T, exit_radius=12).at((6, 0, 0))
    assert abs(fh - 0.0279110338) < 1e-8


def test_exit_time_solve_and_singular_system():
    m = discrete_hit_solve(BALL, 10, mode="exit_time", exit_radius=10)
    assert 0.9 < m.at((0, 0, 0)) / 100 < 1.2
    with pytest.raises(SingularSystem):
        discrete_hit_solve(BALL, 4, mode="exit_time")
