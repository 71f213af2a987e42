import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growing_walks.scale import (
    Method,
    ScaleFunction,
    Verdict,
    dyadic_envelope,
    evaluate,
    f_star_membership,
    j_functional,
    load_table,
)


def test_power_half_in_three_dimensions_has_j_two():
    jv = j_functional(ScaleFunction.power(1.0, 0.5), 3)
    assert jv.verdict is Verdict.FINITE and jv.method is Method.CLOSED_FORM
    assert abs(jv.value - 2.0) <= 1e-12


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.25, 1 / 3])
def test_slow_power_profiles_diverge(alpha):
    assert j_functional(ScaleFunction.power(1.0, alpha), 3).verdict is Verdict.DIVERGENT


def test_constant_profile_diverges():
    assert j_functional(ScaleFunction.constant(5.0), 3).verdict is Verdict.DIVERGENT


def test_geometric_step_profile_partial_sums_are_exact():
    L = 12
    times = np.concatenate([[0.0], np.cumsum(4.0 ** np.arange(L - 1))])
    f = ScaleFunction.piecewise(2.0 ** np.arange(L), times)
    for m in range(1, L):
        assert j_functional(f, 3, horizon=float(times[m])).partial_value == 2.0 - 2.0 ** (1 - m)
    assert j_functional(f, 3).verdict is Verdict.UNDETERMINED


def test_piecewise_validation():
    with pytest.raises(ValueError):
        ScaleFunction.piecewise([1, 2], [1, 2])
    with pytest.raises(ValueError):
        ScaleFunction.piecewise([2, 1], [0, 1])
    with pytest.raises(ValueError):
        ScaleFunction.power(0.0, 0.5)


def test_step_profile_is_right_continuous():
    f = ScaleFunction.piecewise([1.0, 3.0], [0.0, 10.0])
    assert evaluate(f, 9.999) == 1.0 and evaluate(f, 10.0) == 3.0 and evaluate(f, 1e9) == 3.0


@given(st.floats(0.5, 20.0), st.floats(0.05, 2.0))
@settings(max_examples=25, deadline=None)
def test_dyadic_envelope_sandwich(c, alpha):
    f = ScaleFunction.power(c, alpha)
    g = dyadic_envelope(f, t_max=1e8)
    t = np.concatenate([[0.0], np.geomspace(1e-6, 1e8, 400)])
    fv, gv = evaluate(f, t), evaluate(g, t)
    assert np.all(gv <= fv) and np.all(fv <= 2 * gv)


def test_dyadic_envelope_levels_of_root_profile():
    g = dyadic_envelope(ScaleFunction.power(1.0, 0.5), t_max=100)
    assert np.allclose(g.times, [0, 3, 15, 63], atol=1e-6)
    assert list(g.levels) == [1, 2, 4, 8]


def test_f_star_membership_rejects_non_convex_increments():
    f = ScaleFunction.piecewise([1, 3, 4], [0, 1, 2])
    assert f_star_membership(f, 3).verdict == "NotMember"
    with pytest.raises(ValueError):
        f_star_membership(ScaleFunction.power(1, 0.5), 3)


def test_load_table(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("t,value\n0,1\n5,2\n10,2.5\n")
    f = load_table(p)
    assert evaluate(f, 0) == 1 and evaluate(f, 7) >= 2 and math.isfinite(evaluate(f, 100))
