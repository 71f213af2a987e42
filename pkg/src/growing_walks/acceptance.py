"""Acceptance criteria as runnable checks.

Each ``acN`` function runs one criterion at its stated size and tolerance
and returns a :class:`CriterionResult`.  ``quick=True`` shrinks every sample
size; it exists for the determinism check, which compares the CSV output of
two quick runs made with different worker counts.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats as sst

from . import harness as H
from .coupling import coupled_batch
from .geometry import FrozenLattice, GrowingDomain, StarDomain
from .idla import Intensity, grow, shape_deviation
from .oracle import continuous_hit_prob, discrete_hit_solve, excursion_rate
from .rbm import excursion_cycle_counts, first_passage_times
from .scale import ScaleFunction, dyadic_envelope, evaluate, j_functional
from .srw import exit_time_samples, frozen_walks
from .stats import tail_fit, wilson

__all__ = ["CriterionResult", "CRITERIA", "run_check"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    statistic: float
    detail: str
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    seconds: float = 0.0

    def line(self) -> str:
        return f"AC{self.number:<2d} {'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _n(quick: bool, full, small):
    return small if quick else full


# ---------------------------------------------------------------------------
def ac1(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    v = continuous_hit_prob(5, 1, 10, 3)
    ok = abs(v - 1 / 9) <= 1e-12
    rows = [(5.0, 1.0, 10.0, 3, v, 1 / 9)]
    for d in (3, 4, 5):
        for eps, a in ((0.5, 2.0), (1.0, 10.0), (2.0, 7.0)):
            lo, hi = continuous_hit_prob(eps, eps, a, d), continuous_hit_prob(a, eps, a, d)
            ok &= lo == 1.0 and hi == 0.0
            rows += [(eps, eps, a, d, lo, 1.0), (a, eps, a, d, hi, 0.0)]
    return CriterionResult(1, "closed-form hitting probability", bool(ok), abs(v - 1 / 9),
                           f"b(5; 1, 10) = {v:.15f}, |err| = {abs(v - 1 / 9):.1e}, boundary grid exact",
                           {"ac1_grid.csv": (["r", "eps", "a", "d", "value", "expected"], rows)})


def _hit_block(a, start, T, exit_radius, seed, lo, hi):
    lat = FrozenLattice.build(StarDomain.ball(1.0, 3), a)
    hit = np.zeros(len(lat), dtype=bool)
    hit[lat.index((0, 0, 0))] = True
    kill = lat.mask_outside_ball(exit_radius) if exit_radius is not None else np.zeros(len(lat), bool)
    _, outcome = frozen_walks(lat, start, hit, kill, T, hi - lo, seed, lo)
    return list(outcome == 1)


def ac2(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    a = 12
    n = _n(quick, 200_000, 4000)
    T = int(50 * a * a * math.log(a))
    h = discrete_hit_solve(StarDomain.ball(1.0, 3), a, (0, 0, 0), exit_radius=a).at((6, 0, 0))
    hits = H.fan_out(_hit_block, n, workers, a, (6, 0, 0), T, float(a), seed)
    est = wilson(int(sum(hits)), n)
    gap = abs(est.value - h)
    ok = gap <= 3 * est.half_width
    return CriterionResult(2, "oracle vs Monte Carlo hit probability", bool(ok), gap / est.half_width,
                           f"oracle {h:.6f}, MC {est.value:.6f} [{est.lo:.6f}, {est.hi:.6f}], "
                           f"gap = {gap / est.half_width:.2f} half-widths (limit 3)",
                           {"ac2_hit.csv": (["a", "T", "oracle", "estimate", "lo", "hi"],
                                            [(a, T, h, est.value, est.lo, est.hi)])})


def _cycle_block(seed, lo, hi):
    return list(excursion_cycle_counts(10.0, 1.0, 3, hi - lo, seed, replica_offset=lo))


def ac3(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    n = _n(quick, 2000, 100)
    counts = np.asarray(H.fan_out(_cycle_block, n, workers, seed))
    target = 1.0 / excursion_rate(10.0, 1.0, 3)
    rel = abs(counts.mean() - target) / target
    return CriterionResult(3, "geometric excursion count", bool(rel <= 0.10), rel,
                           f"mean cycles {counts.mean():.3f} vs {target:.3f} (rel err {rel:.3f}, limit 0.10)",
                           {"ac3_cycles.csv": (["replica", "cycles"], list(enumerate(counts.tolist())))})


def _rbm_exit_block(seed, dt, lo, hi):
    dom = GrowingDomain(StarDomain.ball(2.0, 3), ScaleFunction.constant(1.0), mode="continuum")
    t, st = first_passage_times(dom, np.zeros((hi - lo, 3)), "exit", 1.0, 100.0, seed, dt=dt, replica_offset=lo)
    t = t.astype(float)
    t[st != 1] = np.inf
    return list(t)


def _srw_exit_block(seed, lo, hi):
    return list(exit_time_samples(StarDomain.ball(1.0, 3), 16, (0, 0, 0), hi - lo, seed, replica_offset=lo))


def ac4(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    n = _n(quick, 10_000, 1000)
    grid = np.linspace(1.0, 6.0, 11)
    srw = np.asarray(H.fan_out(_srw_exit_block, n, workers, seed))
    # Brownian time in walk units: divide by kappa = 1/d
    rbm = 3.0 * np.asarray(H.fan_out(_rbm_exit_block, n, workers, seed + 1, 1e-4))
    fits = {"srw": tail_fit(srw, grid), "rbm": tail_fit(rbm, grid)}
    ok = all(f.slope < 0 and f.r2 >= 0.95 for f in fits.values())
    det = ", ".join(f"{k} slope {f.slope:.3f} r2 {f.r2:.4f} ({f.cells} cells)" for k, f in fits.items())
    rows = [(k, f.slope, f.intercept, f.r2, f.cells) for k, f in fits.items()]
    return CriterionResult(4, "exponential exit-time tails", bool(ok), min(f.r2 for f in fits.values()), det,
                           {"ac4_tails.csv": (["process", "slope", "intercept", "r2", "cells"], rows)})


def ac5(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    n = _n(quick, 10_000, 500)
    rows, vals = [], []
    for a in (8, 16, 32):
        T = a**3
        hits = H.fan_out(_hit_block, n, workers, a, (a // 2, 0, 0), T, None, seed + a)
        e = wilson(int(sum(hits)), n)
        rows.append((a, T, e.value, e.lo, e.hi))
        vals.append(e.value)
    ratio = max(vals) / min(vals) if min(vals) > 0 else math.inf
    return CriterionResult(5, "T/a^d scaling of hit probability", bool(ratio <= 2.0), ratio,
                           "estimates " + ", ".join(f"a={r[0]}: {r[2]:.4f}" for r in rows)
                           + f"; max/min = {ratio:.3f} (limit 2)",
                           {"ac5_scaling.csv": (["a", "T", "estimate", "lo", "hi"], rows)})


PHASE_GROWING = ("power", (16.0, 0.25))
PHASE_PLATEAU = ("power", (1.0, 0.5))


def _visit_rows(cfg, recs):
    rows = []
    for r, rec in enumerate(recs):
        for k, h in enumerate(cfg.horizons):
            rows.append((r, cfg.master_seed, h, rec["counts"][k], rec["last"][k], rec["final_r"][k]))
    return rows


VISIT_HEADER = ["replica", "seed", "horizon", "n_visits", "last_visit", "final_r"]


def ac6(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    hz = _n(quick, (10**5, 10**6, 10**7), (10**3, 10**4, 10**5))
    reps = _n(quick, 20, 6)
    base = H.ExperimentConfig(kind="srw", d=3, shape=("ball", (1.0,)), horizons=hz, replicas=reps,
                              master_seed=seed, enforce_b2=True)
    out, tables, ok = [], {}, True
    for label, spec, want in (("0.25", PHASE_GROWING, "Growing"), ("0.5", PHASE_PLATEAU, "Plateau")):
        cfg = replace(base, scale=spec)
        pv, recs = H.phase_experiment(cfg, workers)
        ok &= pv.empirical_trend == want and pv.consistent is True
        out.append(f"alpha {label}: J {pv.j_verdict}, trend {pv.empirical_trend}, consistent {pv.consistent}, "
                   f"medians {[round(m, 1) for m in pv.medians]}")
        tables[f"ac6_alpha{label}_srw_visits.csv"] = (VISIT_HEADER, _visit_rows(cfg, recs))
        tables[f"ac6_alpha{label}.plot.csv"] = (
            ["x", "y", "lo", "hi"],
            [(float(h), m, c[0], c[1]) for h, m, c in zip(pv.horizons, pv.medians, pv.cis)],
        )
    return CriterionResult(6, "phase dichotomy", bool(ok), float(ok), "; ".join(out), tables)


def phase_unit_offset_diagnostic(seed: int = 1, workers: int = 1, quick: bool = False) -> str:
    """Same growing experiment with ``f = (1 + t)**0.25`` and the shape rescaled to ``B_2``."""
    hz = _n(quick, (10**5, 10**6, 10**7), (10**3, 10**4, 10**5))
    cfg = H.ExperimentConfig(kind="srw", d=3, shape=("ball", (1.0,)), scale=("power", (1.0, 0.25)), horizons=hz,
                             replicas=_n(quick, 20, 6), master_seed=seed, enforce_b2=True)
    pv, _ = H.phase_experiment(cfg, workers)
    return (f"diagnostic, (1+t)^0.25 on B_2: trend {pv.empirical_trend}, medians "
            f"{[round(m, 1) for m in pv.medians]}, CIs {[tuple(c) for c in pv.cis]}")


def _couple_block(x1, x2, horizon, dt, seed, stop_level, rotation, lo, hi):
    g = ScaleFunction.power(1.0, 0.3)
    tr = coupled_batch("nested", g, 2.0, x1, x2, horizon, dt, seed, hi - lo, lo, stop_level, rotation)
    return [(t.psi_min, t.n_phase_switches, t.t_end, t.invalid, t.alternation_ok()) for t in tr]


def _indep_block(x2, dt, seed, lo, hi):
    dom = GrowingDomain(StarDomain.ball(2.0, 3), ScaleFunction.power(1.0, 0.3), mode="continuum")
    t, st = first_passage_times(dom, np.tile(x2, (hi - lo, 1)), "exit", 0.5, 50.0, seed, dt=dt,
                                replica_offset=lo, bridge=False, sub=31)
    return list(np.where(st == 1, t, np.inf))


def ac7(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    dt = 1e-4
    band = -10 * math.sqrt(dt)
    x1, x2 = (0.1, 0.0, 0.0), (0.0, 0.2, 0.0)
    n_runs = _n(quick, 100, 4)
    horizon = _n(quick, 50.0, 2.0)
    runs = H.fan_out(_couple_block, n_runs, workers, x1, x2, horizon, dt, seed, 0.0, "tracking")
    breaches = sum(r[0] < band for r in runs)
    bad = sum(r[3] or not r[4] for r in runs)
    n_ks = _n(quick, 2000, 200)
    coupled = np.array([r[2] for r in H.fan_out(_couple_block, n_ks, workers, x1, x2, 50.0, dt, seed + 1, 0.5,
                                                "tracking")])
    indep = np.asarray(H.fan_out(_indep_block, n_ks, workers, np.array(x2), dt, seed + 2))
    p = float(sst.ks_2samp(coupled, indep).pvalue)
    ok = breaches == 0 and bad == 0 and p > 0.01
    rows = [(i, seed, "nested", r[0], r[1], horizon) for i, r in enumerate(runs)]
    return CriterionResult(
        7, "coupling keeps psi non-negative", bool(ok), min(r[0] for r in runs),
        f"min psi {min(r[0] for r in runs):.4f} (band {band:.2f}), breaches {breaches}/{n_runs}, "
        f"invalid/alternation failures {bad}, marginal KS p = {p:.3f}",
        {"ac7_coupling.csv": (["replica", "seed", "scenario", "min_psi", "n_phase_switches", "horizon"], rows)},
    )


def frozen_rotation_diagnostic(seed: int = 1, workers: int = 1, quick: bool = False) -> str:
    """The rotation fixed at the switching time, for comparison with the tracking rotation."""
    n = _n(quick, 20, 2)
    runs = H.fan_out(_couple_block, n, workers, (0.1, 0.0, 0.0), (0.0, 0.2, 0.0), _n(quick, 50.0, 2.0), 1e-4,
                     seed, 0.0, "frozen")
    psi = [r[0] for r in runs]
    return f"diagnostic, frozen rotation: min psi {min(psi):.3f}, {sum(p < -0.1 for p in psi)}/{n} runs below band"


def ac8(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    n_law = _n(quick, 10_000, 300)
    counts = {}
    first_ok = True
    for i in range(n_law):
        tl = grow(Intensity.const(1.0), 1.0, 1e9, seed * 1_000_003 + i, max_settled=2)
        first_ok &= tuple(tl.sites[0]) == (0, 0, 0)
        key = tuple(int(v) for v in tl.sites[1])
        counts[key] = counts.get(key, 0) + 1
    units = [tuple(int(v) for v in row) for row in np.vstack([np.eye(3, dtype=int), -np.eye(3, dtype=int)])]
    obs = np.array([counts.get(u, 0) for u in units])
    p = float(sst.chisquare(obs).pvalue) if sum(counts.values()) == obs.sum() else 0.0
    M = _n(quick, 10_000, 500)
    seeds = _n(quick, 20, 3)
    rows, good, order_ok = [], 0, True
    for s in range(seeds):
        tl = grow(Intensity.const(1.0), 1.0, 1e12, seed + 7919 * (s + 1), max_settled=M)
        order_ok &= tl.mt_le_nt()
        sd = shape_deviation(tl)
        g = sd["inner_ratio"] >= 0.85 and sd["outer_ratio"] <= 1.15
        good += g
        rows.append((s, sd["M"], sd["inner_ratio"], sd["outer_ratio"], int(g)))
    frac = good / seeds
    ok = first_ok and p > 0.001 and order_ok and frac >= 0.95
    return CriterionResult(
        8, "IDLA sanity", bool(ok), frac,
        f"M<=N {order_ok}, first site at origin {first_ok}, second-site chi-square p = {p:.3f}, "
        f"shape within bounds in {good}/{seeds} seeds (need 95%)",
        {"ac8_shape.csv": (["seed_index", "M", "inner_ratio", "outer_ratio", "within"], rows),
         "ac8_second_site.csv": (["x1", "x2", "x3", "count"], [(*u, int(c)) for u, c in zip(units, obs)])},
    )


def ac9(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    jv = j_functional(ScaleFunction.power(1.0, 0.5), 3)
    ok = jv.value is not None and abs(jv.value - 2.0) <= 1e-12
    rows = [("power_1_0.5", jv.value, 2.0)]
    # levels 2^l held for 4^l time units: partial sums 2 - 2^(1-L)
    L = 20
    times = np.concatenate([[0.0], np.cumsum(4.0 ** np.arange(L - 1))])
    f = ScaleFunction.piecewise(2.0 ** np.arange(L), times)
    for m in range(1, L):
        v = j_functional(f, 3, horizon=float(times[m])).partial_value
        ok &= v == 2.0 - 2.0 ** (1 - m)
        rows.append((f"geometric_{m}", v, 2.0 - 2.0 ** (1 - m)))
    probes = np.concatenate([[0.0], np.geomspace(1e-6, 1e9, 999)])
    worst = 0
    for prof in (ScaleFunction.power(1.0, 0.5), ScaleFunction.power(3.0, 0.25), f):
        env = dyadic_envelope(prof)
        fv, gv = evaluate(prof, probes), evaluate(env, probes)
        worst += int(np.sum((gv > fv) | (fv > 2 * gv)))
    ok &= worst == 0
    return CriterionResult(9, "J functional exactness", bool(ok), abs(jv.value - 2.0),
                           f"J = {jv.value!r}, geometric partial sums exact, envelope violations {worst}/3000",
                           {"ac9_values.csv": (["check", "value", "expected"], rows)})


def ac10(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    n = _n(quick, 10_000, 400)
    res = H.invariance_check(StarDomain.ball(1.0, 3), [10, 20, 40], n, seed, rbm_dt=_n(quick, 1e-5, 1e-4),
                             workers=workers)
    ok = res.inversions() <= 1 and res.ks[-1] < 0.1
    rows = [(a, k, p) for a, k, p in zip(res.a_list, res.ks, res.pvalues)]
    return CriterionResult(10, "invariance-principle trend", bool(ok), res.ks[-1],
                           "KS " + ", ".join(f"a={a:g}: {k:.4f}" for a, k, _ in rows)
                           + f"; inversions {res.inversions()}, final {res.ks[-1]:.4f} (limit 0.1)",
                           {"ac10_ks.csv": (["a", "ks", "p"], rows),
                            "ac10.plot.csv": (["x", "y", "lo", "hi"], [(a, k, k, k) for a, k, _ in rows])})


def ac11(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    cfg = H.ExperimentConfig(kind="srw", d=3, shape=("ball", (1.0,)), scale=PHASE_GROWING,
                             horizons=(_n(quick, 2_000_000, 20_000),), replicas=_n(quick, 200, 20),
                             master_seed=seed)
    targets = [(0, 0, 0), (1, 1, 0), (2, 0, 0)]
    res = H.target_independence(cfg, targets, workers)
    rows = [(" ".join(map(str, t)), int(res.table[0, j]), int(res.table[1, j])) for j, t in enumerate(targets)]
    return CriterionResult(11, "target independence", bool(res.pvalue > 0.01), res.pvalue,
                           f"k = {res.k}, at-least-k counts {res.table[0].tolist()} of {res.counts.shape[0]}, "
                           f"chi-square p = {res.pvalue:.3f} (need > 0.01)",
                           {"ac11_targets.csv": (["target", "at_least_k", "below_k"], rows)})


def _tree_equal(a: Path, b: Path) -> tuple[bool, list]:
    fa = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    fb = sorted(p.relative_to(b) for p in b.rglob("*.csv"))
    if fa != fb:
        return False, ["file lists differ"]
    diff = [str(p) for p in fa if not filecmp.cmp(a / p, b / p, shallow=False)]
    return not diff, diff


def ac12(seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    with tempfile.TemporaryDirectory() as tmp:
        d1, d2 = Path(tmp) / "w1", Path(tmp) / "w2"
        sub = [c for c in CRITERIA if c != 12]
        run_check(d1, seed, workers=1, quick=True, criteria=sub)
        run_check(d2, seed, workers=2, quick=True, criteria=sub)
        same, diff = _tree_equal(d1, d2)
        n = len(list(d1.rglob("*.csv")))
    return CriterionResult(12, "determinism across worker counts", bool(same), float(same),
                           f"{n} CSVs from quick check runs with 1 and 2 workers "
                           + ("byte-identical" if same else f"differ: {diff}"))


CRITERIA = {1: ac1, 2: ac2, 3: ac3, 4: ac4, 5: ac5, 6: ac6, 7: ac7, 8: ac8, 9: ac9, 10: ac10, 11: ac11, 12: ac12}
DIAGNOSTICS = {6: phase_unit_offset_diagnostic, 7: frozen_rotation_diagnostic}


def run_criterion(n: int, seed: int = 1, workers: int = 1, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[n](seed=seed, workers=workers, quick=quick)
    res.seconds = time.perf_counter() - t0
    return res


def run_check(out, seed: int = 1, workers: int = 1, quick: bool = False, criteria=None, diagnostics: bool = False,
              echo=None) -> list[CriterionResult]:
    """Run criteria, write their tables and ``check.csv`` under ``out``."""
    out = Path(out)
    results = []
    for n in criteria if criteria is not None else sorted(CRITERIA):
        res = run_criterion(n, seed, workers, quick)
        results.append(res)
        for name, (header, rows) in res.tables.items():
            H.write_csv(out / name, header, rows)
        if echo:
            echo(res.line())
            if diagnostics and n in DIAGNOSTICS:
                echo("     " + DIAGNOSTICS[n](seed, workers, quick))
    H.write_csv(out / "check.csv", ["criterion", "name", "passed", "statistic"],
                [(r.number, r.name, r.passed, r.statistic) for r in results])
    return results
