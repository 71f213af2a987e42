import json

import pytest

from growing_walks import harness as H
from growing_walks.cli import main


def write(tmp_path, text):
    p = tmp_path / "c.conf"
    p.write_text(text)
    return str(p)


def test_simulate_srw(tmp_path):
    cfg = write(tmp_path, "kind = srw\nscale = power(1, 0.5)\nhorizons = [100, 1000, 10000]\nreplicas = 4\n")
    assert main(["simulate-srw", "--config", cfg, "--out", str(tmp_path / "o"), "--seed", "2", "--workers", "2"]) == 0
    header, rows = H.read_csv(tmp_path / "o" / "srw_visits.csv")
    assert header == ["replica", "seed", "horizon", "n_visits", "last_visit", "final_r"]
    assert len(rows) == 12 and rows[0][1] == 2
    v = json.loads((tmp_path / "o" / "verdict.json").read_text())
    for key in ("kind", "j_verdict", "empirical_trend", "consistent", "thresholds", "assumptions"):
        assert key in v
    assert (tmp_path / "o" / "srw_visits.plot.csv").read_text().startswith("x,y,lo,hi\n")


def test_simulate_rbm(tmp_path):
    cfg = write(tmp_path, "kind = rbm\nscale = power(1, 0.5)\nhorizons = [1, 2]\nreplicas = 2\ndt_factor = 1e-3\n")
    assert main(["simulate-rbm", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    header, rows = H.read_csv(tmp_path / "o" / "rbm_excursions.csv")
    assert header == ["replica", "seed", "horizon", "n_excursions", "truncated", "first_tau", "last_sigma"]
    assert len(rows) == 4


def test_idla_and_sites(tmp_path):
    cfg = write(tmp_path, "kind = idla\nhorizons = [200]\nsites = true\nsamples = 5\n")
    assert main(["idla", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    h, rows = H.read_csv(tmp_path / "o" / "idla_timeline.csv")
    assert h == ["t", "M", "N", "inner_ratio", "outer_ratio"] and len(rows) == 5
    h, _ = H.read_csv(tmp_path / "o" / "idla_sites.csv")
    assert h == ["x1", "x2", "x3", "settle_time"]


def test_couple(tmp_path):
    cfg = write(tmp_path, "kind = couple\nscale = power(1, 0.3)\nhorizons = [0.5]\nreplicas = 2\n")
    assert main(["couple", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    h, rows = H.read_csv(tmp_path / "o" / "coupling.csv")
    assert h == ["replica", "seed", "scenario", "min_psi", "n_phase_switches", "horizon"]
    assert rows[0][2] == "nested"


def test_hit_prob(tmp_path, capsys):
    cfg = write(tmp_path, "kind = hit_prob\na = 8\n")
    assert main(["hit-prob", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "r,oracle,closed_form,abs_diff" and len(out) == 8
    assert float(out[4].split(",")[3]) == 0.0  # matched at r = a/2


def test_sweep(tmp_path):
    cfg = write(tmp_path, "kind = sweep\nscale = power(4, 0.25)\nalphas = [0.25, 0.5]\n"
                          "horizons = [100, 1000, 10000]\nreplicas = 4\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    h, rows = H.read_csv(tmp_path / "o" / "sweep.csv")
    assert [r[1] for r in rows] == ["Divergent", "Finite"]


def test_kind_mismatch_and_bad_config(tmp_path, capsys):
    cfg = write(tmp_path, "kind = idla\n")
    assert main(["simulate-srw", "--config", cfg]) == 2
    cfg = write(tmp_path, "bogus = 1\n")
    assert main(["idla", "--config", cfg]) == 2


def test_check_subset(tmp_path, capsys):
    assert main(["check", "--criteria", "1", "9", "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "AC1 " in out and "AC9 " in out
    h, rows = H.read_csv(tmp_path / "o" / "check.csv")
    assert [r[0] for r in rows] == [1, 9]
