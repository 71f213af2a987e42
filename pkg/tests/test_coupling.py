import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growing_walks.coupling import coupled_batch, coupled_run_nested, coupled_run_same_ball, rotation_matrix
from growing_walks.scale import ScaleFunction

G = ScaleFunction.power(1.0, 0.3)


def test_rotation_examples():
    assert np.allclose(rotation_matrix([1, 0, 0], [0, 1, 0]), [[0, -1, 0], [1, 0, 0], [0, 0, 1]])
    assert np.allclose(rotation_matrix([1, 0, 0], [1, 0, 0]), np.eye(3))
    O = rotation_matrix([1, 0, 0], [-1, 0, 0])
    assert np.allclose(O @ [1, 0, 0], [-1, 0, 0]) and abs(np.linalg.det(O) - 1) < 1e-12
    with pytest.raises(ValueError):
        rotation_matrix([1, 0, 0], [2, 0, 0])


@given(st.integers(0, 10**6))
@settings(max_examples=200, deadline=None)
def test_random_rotations_in_five_dimensions(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=5)
    y = rng.normal(size=5)
    y *= np.linalg.norm(x) / np.linalg.norm(y)
    O = rotation_matrix(x, y)
    assert np.allclose(O @ x, y, atol=1e-10)
    assert np.max(np.abs(O.T @ O - np.eye(5))) < 1e-12
    # fixes the orthogonal complement of span{x, y}
    q, _ = np.linalg.qr(np.column_stack([x, y, rng.normal(size=(5, 3))]))
    for k in range(2, 5):
        assert np.allclose(O @ q[:, k], q[:, k], atol=1e-10)


def test_nested_psi_band_and_alternation():
    dt = 1e-4
    for tr in coupled_batch("nested", G, 2.0, (0.1, 0, 0), (0, 0.2, 0), 2.0, dt, seed=5, replicas=3):
        assert not tr.invalid
        assert tr.psi_min >= -10 * math.sqrt(dt)
        assert tr.alternation_ok()


def test_same_ball_mirror_preserves_radius():
    tr = coupled_run_same_ball(G, (0.1, 0, 0), (0, 0.1, 0), 1.0, dt=1e-4, seed=2)
    assert len(tr.eta_times) == 1 and tr.eta_times[0] == 0.0
    assert abs(np.linalg.norm(tr.x1) - np.linalg.norm(tr.x2)) < 1e-9


def test_coupling_preconditions():
    with pytest.raises(ValueError):
        coupled_run_nested(G, 0.5, (0.1, 0, 0), (0, 0.2, 0), 1.0)
    with pytest.raises(ValueError):
        coupled_run_nested(G, 2.0, (0.3, 0, 0), (0, 0.2, 0), 1.0)
    with pytest.raises(ValueError):
        coupled_run_nested(G, 2.0, (0.1, 0, 0), (0, 0.2, 0), 1.0, rotation="other")


def test_reproducible():
    a = coupled_run_nested(G, 2.0, (0.1, 0, 0), (0, 0.2, 0), 0.5, seed=4, replica=1)
    b = coupled_run_nested(G, 2.0, (0.1, 0, 0), (0, 0.2, 0), 0.5, seed=4, replica=1)
    assert a.psi_min == b.psi_min and np.array_equal(a.x2, b.x2)
