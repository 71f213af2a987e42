import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growing_walks import harness as H
from growing_walks.scale import ScaleFunction

SMALL = """
# a small growing walk
kind = srw
d = 3
shape = ball(1)
scale = steps([(0, 2), (100, 4), (10000, 8)])
horizons = [1000, 10000, 100000]
replicas = 6
master_seed = 3
enforce_b2 = true
out = out/small
"""


def test_parse_config_values():
    cfg = H.parse_config(SMALL)
    assert cfg.kind == "srw" and cfg.horizons == (1000, 10000, 100000)
    assert cfg.scale == ("steps", (((0, 2), (100, 4), (10000, 8)),))
    assert cfg.out == "out/small" and cfg.enforce_b2 is True
    f = H.build_scale(cfg)
    assert f.variant == "piecewise" and list(f.levels) == [2, 4, 8]


def test_unknown_key_and_bad_horizons():
    with pytest.raises(H.ConfigError):
        H.parse_config("kind = srw\ncolour = red\n")
    with pytest.raises(H.ConfigError):
        H.parse_config("horizons = [10, 5]\n")
    with pytest.raises(H.ConfigError):
        H.parse_config("d = 2\n")
    with pytest.raises(H.ConfigError):
        H.parse_config("replicas = 0\n")


def test_table_paths_resolve_against_config_dir(tmp_path):
    (tmp_path / "f.csv").write_text("t,value\n0,1\n10,2\n")
    (tmp_path / "e.conf").write_text("scale = table(f.csv)\n")
    cfg = H.load_config(tmp_path / "e.conf")
    assert H.build_scale(cfg)(10.0) == 2.0


def test_overrides_win():
    cfg = H.parse_config(SMALL, master_seed=9, replicas=2)
    assert cfg.master_seed == 9 and cfg.replicas == 2


def test_classify_trend_synthetic():
    rng = np.random.default_rng(0)
    grow = np.column_stack([rng.poisson(10, 40), rng.poisson(20, 40), rng.poisson(60, 40)])
    assert H.classify_trend(grow)[0] == "Growing"
    flat = np.tile([3, 4, 4], (40, 1))
    assert H.classify_trend(flat)[0] == "Plateau"
    mixed = np.column_stack([np.full(40, 10), np.full(40, 10), np.r_[np.full(20, 10), np.full(20, 14)]])
    assert H.classify_trend(mixed)[0] == "Inconclusive"
    # thresholds are overridable
    assert H.classify_trend(mixed, plateau_fraction=0.5)[0] == "Plateau"


def test_consistency_truth_table():
    assert H.is_consistent("Divergent", "Growing") is True
    assert H.is_consistent("Finite", "Plateau") is True
    assert H.is_consistent("Finite", "Growing") is False
    assert H.is_consistent("Undetermined", "Growing") is None
    assert H.is_consistent("Finite", "Inconclusive") is None


def test_frozen_domain_is_growing():
    cfg = H.parse_config("scale = constant(3)\nhorizons = [1000, 10000, 100000]\nreplicas = 10\nmaster_seed = 2\n")
    pv, _ = H.phase_experiment(cfg)
    assert pv.j_verdict == "Divergent" and pv.empirical_trend == "Growing" and pv.consistent
    assert pv.regime == "proven"


def test_phase_results_do_not_depend_on_worker_count():
    cfg = H.parse_config(SMALL)
    a, ra = H.phase_experiment(cfg, workers=1)
    b, rb = H.phase_experiment(cfg, workers=3)
    assert ra == rb and a.medians == b.medians


def test_target_parity_and_single_target():
    cfg = H.parse_config(SMALL.replace("horizons = [1000, 10000, 100000]", "horizons = [2000]"))
    with pytest.raises(ValueError):
        H.target_independence(cfg, [(0, 0, 0), (1, 0, 0)])
    res = H.target_independence(cfg, [(0, 0, 0)])
    assert res.pvalue == 1.0


def test_invariance_check_small():
    from growing_walks.geometry import StarDomain

    res = H.invariance_check(StarDomain.ball(1.0), [6, 12], 300, seed=1, rbm_dt=1e-3)
    assert len(res.ks) == 2 and all(0 <= k <= 1 for k in res.ks)
    assert res.kappa == 1 / 3
    with pytest.raises(ValueError):
        H.invariance_check(StarDomain.ball(1.0), [12, 6], 10, seed=1)


cell = st.one_of(
    st.integers(-10**12, 10**12),
    st.floats(-1e8, 1e8, allow_nan=False).map(lambda x: round(x, 6)),
    st.sampled_from(["nested", "same_ball", "Growing"]),
)


@given(st.lists(st.lists(cell, min_size=3, max_size=3), max_size=20))
@settings(max_examples=50, deadline=None)
def test_csv_round_trip(tmp_path_factory, rows):
    p = tmp_path_factory.mktemp("csv") / "x.csv"
    H.write_csv(p, ["a", "b", "c"], rows)
    header, back = H.read_csv(p)
    q = p.with_name("y.csv")
    H.write_csv(q, header, back)
    assert p.read_bytes() == q.read_bytes()
    assert b"\r" not in p.read_bytes()


def test_csv_formatting():
    assert H._fmt(1.0, 6) == "1.000000" and H._fmt(-0.0, 3) == "0.000"
    assert H._fmt(True, 6) == "1" and H._fmt(math.nan, 6) == "nan"
