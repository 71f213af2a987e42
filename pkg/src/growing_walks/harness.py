"""Experiment configuration, verdict logic, replica fan-out and file output.

Replicas are identified by ``(master_seed, replica)`` and draw from their own
counter streams, so a block of replicas can run in any worker and the
concatenated result, ordered by replica index, never depends on the worker
count.
"""

from __future__ import annotations

import ast
import csv
import json
import math
import multiprocessing as mp
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import stats as sst

from .geometry import FrozenLattice, GrowingDomain, StarDomain, load_radial_table
from .rbm import DiffusionConfig, first_passage_times, run_rbmg
from .scale import ScaleFunction, Verdict, f_star_membership, j_functional, load_table
from .srw import frozen_walks, walk_counts
from .stats import median_ci

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "parse_config",
    "load_config",
    "build_scale",
    "build_shape",
    "build_domain",
    "fan_out",
    "PhaseVerdict",
    "ReplicaFailure",
    "classify_trend",
    "is_consistent",
    "phase_experiment",
    "InvarianceResult",
    "invariance_check",
    "TargetResult",
    "target_independence",
    "write_csv",
    "read_csv",
    "write_plot",
    "write_json",
    "KAPPA_NOTE",
]

KAPPA_NOTE = "walk-to-Brownian time scale kappa = 1/d (per-coordinate variance of one lattice step)"
TREND_NOTE = "trend thresholds are conventions: a finite run cannot decide 'infinitely often'"


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class ReplicaFailure(RuntimeError):
    """Too many replicas failed."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "srw"
    d: int = 3
    shape: tuple = ("ball", (1.0,))
    scale: tuple = ("power", (1.0, 0.5))
    horizons: tuple = (100_000,)
    replicas: int = 20
    master_seed: int = 0
    out: str = "out"
    target: tuple | None = None
    targets: tuple | None = None
    start: tuple | None = None
    enforce_b2: bool = True
    # diffusion
    scheme: str = "moving"
    dt: float | None = None
    dt_factor: float = 1e-4
    epsilon: float = 0.1
    outer: float = 0.5
    # verdict thresholds
    growth: float = 0.5
    plateau_increase: int = 1
    plateau_fraction: float = 0.8
    failure_limit: float = 0.05
    # sweep
    alphas: tuple = ()
    # coupling
    scenario: str = "nested"
    c: float = 2.0
    x1: tuple | None = None
    x2: tuple | None = None
    rotation: str = "tracking"
    # idla
    intensity: tuple = ("const", (1.0,))
    v: float = 1.0
    max_settled: int | None = None
    sites: bool = False
    samples: int = 50
    # hit-prob
    a: float = 12.0
    exit_radius: float | None = None
    base_dir: str = "."

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {sorted(KINDS)}")
        if self.d < 3:
            raise ConfigError("d must be at least 3")
        h = list(self.horizons)
        if not h or any(b <= a for a, b in zip(h, h[1:])) or h[0] <= 0:
            raise ConfigError("horizons must be positive and strictly increasing")
        if self.replicas < 1:
            raise ConfigError("replicas must be at least 1")
        if not 0 < self.plateau_fraction <= 1 or self.growth < 0 or self.plateau_increase < 0:
            raise ConfigError("invalid trend thresholds")

    @property
    def thresholds(self) -> dict:
        return {
            "growth": self.growth,
            "plateau_increase": self.plateau_increase,
            "plateau_fraction": self.plateau_fraction,
            "failure_limit": self.failure_limit,
        }


KINDS = {"srw", "rbm", "idla", "couple", "hit_prob", "sweep"}
_FIELDS = {f.name for f in fields(ExperimentConfig)} - {"base_dir"}
_CALL = re.compile(r"^([A-Za-z_]\w*)\s*\((.*)\)$", re.S)


def _parse_value(raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        pass
    m = _CALL.match(text)
    if m:
        name, inner = m.group(1), m.group(2).strip()
        if not inner:
            return (name, ())
        try:
            args = ast.literal_eval(f"({inner},)")
        except (ValueError, SyntaxError):
            args = (inner.strip("'\""),)  # bare path argument
        return (name, tuple(args))
    if re.fullmatch(r"[A-Za-z_][\w\-]*", text):
        return text
    raise ConfigError(f"cannot parse value {raw!r}")


def _tuple(v):
    if isinstance(v, (list, tuple)):
        return tuple(_tuple(x) for x in v)
    return v


def parse_config(text: str, base_dir: str = ".", **overrides) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    values: dict = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        values[key] = raw.strip("'\"") if key == "out" else _tuple(_parse_value(raw))
    for k, v in overrides.items():
        if v is not None:
            values[k] = v
    for k in ("horizons", "alphas"):
        if k in values and not isinstance(values[k], tuple):
            values[k] = (values[k],)
    for k in ("shape", "scale", "intensity"):
        if k in values and isinstance(values[k], str):
            values[k] = (values[k], ())
    values["base_dir"] = str(base_dir)
    try:
        return ExperimentConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=str(path.parent), **overrides)


def _resolve(cfg: ExperimentConfig, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else Path(cfg.base_dir) / q


def build_scale(cfg: ExperimentConfig, spec=None) -> ScaleFunction:
    name, args = spec if spec is not None else cfg.scale
    if name == "power":
        return ScaleFunction.power(*args)
    if name == "constant":
        return ScaleFunction.constant(*args)
    if name == "steps":
        pairs = args[0] if len(args) == 1 and isinstance(args[0], tuple) and isinstance(args[0][0], tuple) else args
        t = [p[0] for p in pairs]
        a = [p[1] for p in pairs]
        return ScaleFunction.piecewise(a, t)
    if name == "table":
        return load_table(_resolve(cfg, args[0]))
    raise ConfigError(f"unknown scale {name!r}")


def build_shape(cfg: ExperimentConfig) -> StarDomain:
    name, args = cfg.shape
    if name == "ball":
        return StarDomain.ball(float(args[0]) if args else 1.0, cfg.d)
    if name == "ellipsoid":
        if len(args) != cfg.d:
            raise ConfigError("ellipsoid needs d semi-axes")
        return StarDomain.ellipsoid(args)
    if name == "radial_table":
        return load_radial_table(_resolve(cfg, args[0]), cfg.d)
    raise ConfigError(f"unknown shape {name!r}")


def build_domain(cfg: ExperimentConfig, mode: str = "lattice", scale_spec=None) -> GrowingDomain:
    return GrowingDomain(build_shape(cfg), build_scale(cfg, scale_spec), mode=mode, enforce_b2=cfg.enforce_b2)


def _point(p, d, default=None):
    if p is None:
        return default
    if len(p) != d:
        raise ConfigError(f"point {p} does not have {d} coordinates")
    return tuple(p)


# ---------------------------------------------------------------------------
# worker pool
# ---------------------------------------------------------------------------
def _blocks(n: int, workers: int) -> list[tuple[int, int]]:
    k = max(1, min(workers, n))
    edges = [n * i // k for i in range(k + 1)]
    return [(edges[i], edges[i + 1]) for i in range(k) if edges[i + 1] > edges[i]]


def fan_out(fn, n: int, workers: int = 1, *args) -> list:
    """Run ``fn(*args, lo, hi)`` over contiguous replica blocks; concatenate in replica order.

    ``fn`` returns a list with one entry per replica in ``[lo, hi)``.
    """
    blocks = _blocks(n, workers)
    if workers <= 1 or len(blocks) == 1:
        parts = [fn(*args, lo, hi) for lo, hi in blocks]
    else:
        method = "fork" if "fork" in mp.get_all_start_methods() else "spawn"
        with ProcessPoolExecutor(len(blocks), mp_context=mp.get_context(method)) as ex:
            futs = [ex.submit(fn, *args, lo, hi) for lo, hi in blocks]
            parts = [f.result() for f in futs]
    return [x for part in parts for x in part]


# ---------------------------------------------------------------------------
# verdict logic
# ---------------------------------------------------------------------------
@dataclass
class PhaseVerdict:
    kind: str
    j_verdict: str
    empirical_trend: str
    consistent: bool | None
    horizons: list
    medians: list
    cis: list
    thresholds: dict
    regime: str = ""
    failures: int = 0
    assumptions: list = field(default_factory=list)
    j_value: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


def classify_trend(counts, growth: float = 0.5, plateau_increase: int = 1,
                   plateau_fraction: float = 0.8, conf: float = 0.95):
    """Classify a (replicas, horizons) count matrix.

    Growing: the median rises by at least ``growth`` (relative) from the
    middle to the last horizon and the two median CIs do not overlap.
    Plateau: at least ``plateau_fraction`` of replicas gain at most
    ``plateau_increase`` counts over the same span.  Otherwise Inconclusive.
    Returns ``(trend, medians, cis)``.
    """
    c = np.asarray(counts, dtype=float)
    if c.ndim != 2 or c.shape[0] == 0 or c.shape[1] < 2:
        raise ValueError("need a (replicas, >= 2 horizons) matrix")
    meds, cis = [], []
    for j in range(c.shape[1]):
        m, lo, hi = median_ci(c[:, j], conf)
        meds.append(float(m))
        cis.append((float(lo), float(hi)))
    mid = c.shape[1] // 2 if c.shape[1] > 2 else 0
    m0, m1 = meds[mid], meds[-1]
    if m1 > m0 and m1 >= (1.0 + growth) * m0 and cis[mid][1] < cis[-1][0]:
        trend = "Growing"
    elif np.mean(c[:, -1] - c[:, mid] <= plateau_increase) >= plateau_fraction:
        trend = "Plateau"
    else:
        trend = "Inconclusive"
    return trend, meds, cis


def is_consistent(j_verdict: str, trend: str) -> bool | None:
    """Divergent J predicts Growing, finite J predicts Plateau; undefined otherwise."""
    if j_verdict == Verdict.UNDETERMINED.value or trend == "Inconclusive":
        return None
    return (j_verdict == Verdict.DIVERGENT.value) == (trend == "Growing")


def _regime(f: ScaleFunction, d: int, jv) -> str:
    if jv.verdict is Verdict.FINITE or f.is_bounded():
        return "proven"
    if f.variant == "piecewise":
        try:
            if f_star_membership(f, d).verdict == "Member":
                return "proven"
        except ValueError:
            pass
    return "conjectured"


# ---------------------------------------------------------------------------
# phase experiments
# ---------------------------------------------------------------------------
def _srw_block(cfg: ExperimentConfig, lo: int, hi: int) -> list:
    dom = build_domain(cfg, "lattice")
    zero = (0,) * cfg.d
    start = _point(cfg.start, cfg.d, zero)
    target = _point(cfg.target, cfg.d, zero)
    out = []
    for r in range(lo, hi):
        w = walk_counts(dom, start, [target], list(cfg.horizons), cfg.master_seed, r)
        out.append({
            "counts": w.counts[0].tolist(),
            "last": w.last_visit[0].tolist(),
            "final_r": [w.radius_at(k) for k in range(len(cfg.horizons))],
            "failed": bool(w.isolated),
        })
    return out


def _rbm_block(cfg: ExperimentConfig, lo: int, hi: int) -> list:
    dom = build_domain(cfg, "continuum")
    hz = np.asarray(cfg.horizons, dtype=float)
    dc = DiffusionConfig(dom, float(hz[-1]), dt=cfg.dt, scheme=cfg.scheme, epsilon=cfg.epsilon,
                         seed=cfg.master_seed, outer=cfg.outer, dt_factor=cfg.dt_factor)
    x0 = None if cfg.start is None else np.asarray(_point(cfg.start, cfg.d), dtype=float)
    out = []
    for r in range(lo, hi):
        _, log = run_rbmg(dc, x0=x0, replica=r, checkpoints=hz)
        rows = []
        for k, h in enumerate(hz):
            taus = log.tau_times[log.tau_times <= h]
            sig = log.sigma_times[log.sigma_times <= h]
            rows.append((
                int(log.counts_at[k]), int(taus.size > sig.size),
                float(taus[0]) if taus.size else math.nan,
                float(sig[-1]) if sig.size else math.nan,
            ))
        out.append({"counts": [x[0] for x in rows], "rows": rows, "failed": bool(log.invalid)})
    return out


def phase_experiment(cfg: ExperimentConfig, workers: int = 1, scale_spec=None):
    """Run replicas to every horizon and classify the visit/excursion counts.

    Returns ``(PhaseVerdict, per-replica records)``.
    """
    if cfg.kind not in ("srw", "rbm", "sweep"):
        raise ConfigError("phase experiments need kind srw or rbm")
    if len(cfg.horizons) < 2:
        raise ConfigError("phase experiments need at least two horizons")
    if scale_spec is not None:
        cfg = replace(cfg, scale=scale_spec)
    kind = "rbm" if cfg.kind == "rbm" else "srw"
    f = build_scale(cfg)
    jv = j_functional(f, cfg.d)
    fn = _rbm_block if kind == "rbm" else _srw_block
    recs = fan_out(fn, cfg.replicas, workers, cfg)
    failed = [i for i, r in enumerate(recs) if r["failed"]]
    if len(failed) > cfg.failure_limit * cfg.replicas:
        raise ReplicaFailure(f"{len(failed)} of {cfg.replicas} replicas failed (first: {failed[:5]})")
    ok = np.array([r["counts"] for r in recs if not r["failed"]], dtype=np.int64)
    trend, meds, cis = classify_trend(ok, cfg.growth, cfg.plateau_increase, cfg.plateau_fraction)
    assumptions = [TREND_NOTE]
    if kind == "rbm":
        assumptions.append("excursions are B_eps -> dB_outer cycles counted by entries into B_eps")
    pv = PhaseVerdict(
        kind, jv.verdict.value, trend, is_consistent(jv.verdict.value, trend), list(cfg.horizons), meds,
        [list(c) for c in cis], cfg.thresholds, _regime(f, cfg.d, jv), len(failed), assumptions,
        None if jv.value is None or math.isinf(jv.value) else float(jv.value),
    )
    return pv, recs


# ---------------------------------------------------------------------------
# invariance principle
# ---------------------------------------------------------------------------
@dataclass
class InvarianceResult:
    a_list: list
    ks: list
    pvalues: list
    kappa: float
    srw_samples: dict
    rbm_samples: np.ndarray
    assumptions: list

    def inversions(self) -> int:
        return int(sum(b > a for a, b in zip(self.ks, self.ks[1:])))


def _srw_exit_block(shape: StarDomain, a: float, frac: float, seed: int, enforce_b2: bool, lo: int, hi: int):
    lat = FrozenLattice.build(shape, a, enforce_b2=enforce_b2)
    hit = lat.radii >= frac * a
    never = np.zeros(len(lat), dtype=bool)
    steps, outcome = frozen_walks(lat, (0,) * lat.d, hit, never, int(1000 * a * a) + 1000, hi - lo, seed, lo)
    s = steps.astype(float) / (a * a)
    s[outcome == 0] = np.inf
    return list(s)


def _rbm_exit_block(shape: StarDomain, frac: float, seed: int, dt: float, horizon: float, lo: int, hi: int):
    dom = GrowingDomain(shape, ScaleFunction.constant(1.0), mode="continuum")
    starts = np.zeros((hi - lo, shape.d))
    t, status = first_passage_times(dom, starts, "exit", frac, horizon, seed, dt=dt, replica_offset=lo)
    t = t.astype(float).copy()
    t[status != 1] = np.inf
    return list(t)


def invariance_check(shape: StarDomain, a_list, replicas: int, seed: int, rbm_dt: float = 1e-5,
                     radius_fraction: float = 0.5, rbm_replicas: int | None = None, workers: int = 1,
                     enforce_b2: bool = True) -> InvarianceResult:
    """KS distances between rescaled walk and reflected Brownian exit times.

    For each ``a`` the walk starts at the origin of the frozen lattice domain
    ``a K`` and stops on leaving ``B_{a r}`` (``r = radius_fraction``); its
    step count is divided by ``a**2``.  The reference is the exit time of
    ``B_r`` by reflected Brownian motion in ``K`` divided by ``kappa = 1/d``.
    """
    a_list = [float(a) for a in a_list]
    if any(b <= a for a, b in zip(a_list, a_list[1:])):
        raise ValueError("a_list must be increasing")
    if not 0 < radius_fraction * 1.0 < shape.inner:
        raise ValueError("the exit ball must lie inside the shape")
    kappa = 1.0 / shape.d
    n_rbm = replicas if rbm_replicas is None else rbm_replicas
    ref = np.asarray(fan_out(_rbm_exit_block, n_rbm, workers, shape, radius_fraction, seed, rbm_dt,
                             1e4 * radius_fraction**2), dtype=float) / kappa
    ks, ps, srw = [], [], {}
    for i, a in enumerate(a_list):
        s = np.asarray(fan_out(_srw_exit_block, replicas, workers, shape, a, radius_fraction, seed + 1 + i,
                               enforce_b2), dtype=float)
        srw[a] = s
        r = sst.ks_2samp(s, ref)
        ks.append(float(r.statistic))
        ps.append(float(r.pvalue))
    return InvarianceResult(a_list, ks, ps, kappa, srw, ref, [KAPPA_NOTE])


# ---------------------------------------------------------------------------
# target independence
# ---------------------------------------------------------------------------
@dataclass
class TargetResult:
    targets: list
    counts: np.ndarray  # (replicas, targets) at the last horizon
    k: int
    table: np.ndarray  # (2, targets): visited >= k, visited < k
    chi2: float
    pvalue: float


def _targets_block(cfg: ExperimentConfig, targets, lo: int, hi: int) -> list:
    dom = build_domain(cfg, "lattice")
    start = _point(cfg.start, cfg.d, (0,) * cfg.d)
    out = []
    for r in range(lo, hi):
        w = walk_counts(dom, start, targets, [cfg.horizons[-1]], cfg.master_seed, r)
        out.append([-1] * len(targets) if w.isolated else w.counts[:, 0].tolist())
    return out


def target_independence(cfg: ExperimentConfig, targets=None, workers: int = 1, k: int | None = None) -> TargetResult:
    """Homogeneity across targets of ``P(visited at least k times by the last horizon)``.

    The same walk replicas are scored against every target.  ``k`` defaults
    to the pooled median count.
    """
    targets = [tuple(int(v) for v in t) for t in (targets if targets is not None else cfg.targets or [(0,) * cfg.d])]
    start = np.asarray(_point(cfg.start, cfg.d, (0,) * cfg.d))
    for t in targets:
        if len(t) != cfg.d:
            raise ValueError(f"target {t} does not have {cfg.d} coordinates")
        if int(np.abs(np.asarray(t) - start).sum()) % 2:
            raise ValueError(f"target {t} is at odd l1 distance from the start (parity)")
    counts = np.asarray(fan_out(_targets_block, cfg.replicas, workers, cfg, targets), dtype=np.int64)
    counts = counts[(counts >= 0).all(axis=1)]
    if k is None:
        k = max(1, int(np.median(counts)))
    hits = (counts >= k).sum(axis=0)
    table = np.vstack([hits, counts.shape[0] - hits])
    if len(targets) < 2 or (table.sum(axis=1) == 0).any():
        chi2, p = 0.0, 1.0
    else:
        res = sst.chi2_contingency(table, correction=False)
        chi2, p = float(res.statistic), float(res.pvalue)
    return TargetResult(targets, counts, int(k), table, chi2, p)


# ---------------------------------------------------------------------------
# file output
# ---------------------------------------------------------------------------
def _fmt(v, decimals: int) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        s = f"{v:.{decimals}f}"
        return "0." + "0" * decimals if s == "-0." + "0" * decimals else s
    return str(v)


def write_csv(path, header, rows, decimals: int = 6) -> Path:
    """Fixed-point decimals, '.' separator, LF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError("row length does not match header")
            w.writerow([_fmt(v, decimals) for v in row])
    return path


def _parse_cell(s: str):
    if re.fullmatch(r"-?\d+", s):
        return int(s)
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path):
    """Return ``(header, rows)`` with integer, float and string cells."""
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[_parse_cell(c) for c in row] for row in r]
    return header, rows


def write_plot(path, xs, ys, los=None, his=None) -> Path:
    los = ys if los is None else los
    his = ys if his is None else his
    rows = [(float(x), float(y), float(lo), float(hi)) for x, y, lo, hi in zip(xs, ys, los, his)]
    return write_csv(path, ["x", "y", "lo", "hi"], rows)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        o = float(o)
        return o if math.isfinite(o) else str(o)
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    return o


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def verdict_record(kind: str, pv: PhaseVerdict | None = None, **extra) -> dict:
    """The ``verdict.json`` payload; non-phase experiments leave the phase fields null."""
    rec = {"kind": kind, "j_verdict": None, "empirical_trend": None, "consistent": None,
           "thresholds": None, "assumptions": []}
    if pv is not None:
        rec.update(pv.to_json())
        rec["kind"] = kind
    rec.update(extra)
    return rec


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# experiment runners behind the CLI subcommands
# ---------------------------------------------------------------------------
def _phase_outputs(cfg: ExperimentConfig, pv: PhaseVerdict | None, out: Path, stem: str):
    if pv is not None:
        write_plot(out / f"{stem}.plot.csv", pv.horizons, pv.medians, [c[0] for c in pv.cis], [c[1] for c in pv.cis])
    return write_json(out / "verdict.json", verdict_record(cfg.kind, pv, config=_config_record(cfg)))


def _config_record(cfg: ExperimentConfig) -> dict:
    rec = asdict(cfg)
    rec.pop("base_dir")
    return rec


def _j_only(cfg: ExperimentConfig) -> PhaseVerdict:
    f = build_scale(cfg)
    jv = j_functional(f, cfg.d)
    return PhaseVerdict(cfg.kind, jv.verdict.value, "Inconclusive", None, list(cfg.horizons), [], [],
                        cfg.thresholds, _regime(f, cfg.d, jv), 0, ["a single horizon gives no trend"])


def run_srw(cfg: ExperimentConfig, out, workers: int = 1) -> PhaseVerdict:
    out = Path(out)
    if len(cfg.horizons) >= 2:
        pv, recs = phase_experiment(cfg, workers)
    else:
        recs = fan_out(_srw_block, cfg.replicas, workers, cfg)
        pv = _j_only(cfg)
    rows = [(r, cfg.master_seed, h, rec["counts"][k], rec["last"][k], rec["final_r"][k])
            for r, rec in enumerate(recs) for k, h in enumerate(cfg.horizons)]
    write_csv(out / "srw_visits.csv", ["replica", "seed", "horizon", "n_visits", "last_visit", "final_r"], rows)
    _phase_outputs(cfg, pv if pv.medians else None, out, "srw_visits")
    return pv


def run_rbm(cfg: ExperimentConfig, out, workers: int = 1) -> PhaseVerdict:
    out = Path(out)
    if len(cfg.horizons) >= 2:
        pv, recs = phase_experiment(cfg, workers)
    else:
        recs = fan_out(_rbm_block, cfg.replicas, workers, cfg)
        pv = _j_only(cfg)
    rows = [(r, cfg.master_seed, float(h), *rec["rows"][k])
            for r, rec in enumerate(recs) for k, h in enumerate(cfg.horizons)]
    write_csv(out / "rbm_excursions.csv",
              ["replica", "seed", "horizon", "n_excursions", "truncated", "first_tau", "last_sigma"], rows)
    _phase_outputs(cfg, pv if pv.medians else None, out, "rbm_excursions")
    return pv


def run_sweep(cfg: ExperimentConfig, out, workers: int = 1) -> list[PhaseVerdict]:
    """Phase experiments over ``alphas`` with ``scale = power(c, alpha)``."""
    out = Path(out)
    name, args = cfg.scale
    if not cfg.alphas:
        raise ConfigError("sweep needs 'alphas'")
    c0 = float(args[0]) if name == "power" else 1.0
    base = replace(cfg, kind="srw") if cfg.kind == "sweep" else cfg
    verdicts, rows = [], []
    for alpha in cfg.alphas:
        pv, _ = phase_experiment(base, workers, scale_spec=("power", (c0, float(alpha))))
        verdicts.append(pv)
        mid = len(pv.medians) // 2 if len(pv.medians) > 2 else 0
        rows.append((float(alpha), pv.j_verdict, pv.empirical_trend,
                     "" if pv.consistent is None else int(pv.consistent), pv.medians[mid], pv.medians[-1]))
    write_csv(out / "sweep.csv", ["alpha", "j_verdict", "empirical_trend", "consistent", "median_mid", "median_last"],
              rows)
    write_plot(out / "sweep.plot.csv", [float(a) for a in cfg.alphas], [v.medians[-1] for v in verdicts],
               [v.cis[-1][0] for v in verdicts], [v.cis[-1][1] for v in verdicts])
    write_json(out / "verdict.json", verdict_record("sweep", None, config=_config_record(cfg),
                                                    runs=[dict(v.to_json(), alpha=float(a))
                                                          for a, v in zip(cfg.alphas, verdicts)],
                                                    thresholds=cfg.thresholds, assumptions=[TREND_NOTE]))
    return verdicts


def _intensity(cfg: ExperimentConfig):
    from .idla import Intensity

    name, args = cfg.intensity
    if name == "const":
        return Intensity.const(*args)
    if name == "power":
        return Intensity.power(*args)
    if name == "table":
        data = np.loadtxt(_resolve(cfg, args[0]), delimiter=",", skiprows=1, ndmin=2)
        return Intensity.table(data[:, 0], data[:, 1])
    raise ConfigError(f"unknown intensity {name!r}")


def run_idla(cfg: ExperimentConfig, out) -> dict:
    from .idla import grow, shape_deviation

    out = Path(out)
    horizon = float(cfg.horizons[-1])
    tl = grow(_intensity(cfg), cfg.v, horizon, cfg.master_seed, d=cfg.d, max_settled=cfg.max_settled)
    t_end = min(horizon, float(tl.settle_times[-1])) if len(tl.settle_times) else horizon
    rows = []
    for t in np.linspace(0.0, t_end, cfg.samples + 1)[1:]:
        m = tl.M(t)
        sd = shape_deviation(tl, t) if m > 0 else {"inner_ratio": math.nan, "outer_ratio": math.nan}
        rows.append((float(t), m, tl.N(t), sd["inner_ratio"], sd["outer_ratio"]))
    write_csv(out / "idla_timeline.csv", ["t", "M", "N", "inner_ratio", "outer_ratio"], rows)
    if cfg.sites:
        hdr = [f"x{i + 1}" for i in range(cfg.d)] + ["settle_time"]
        write_csv(out / "idla_sites.csv", hdr,
                  [(*map(int, s), float(t)) for s, t in zip(tl.sites, tl.settle_times)])
    write_plot(out / "idla_timeline.plot.csv", [r[0] for r in rows], [r[1] for r in rows])
    summary = {"M": len(tl.sites), "M_le_N": tl.mt_le_nt(), "t_end": t_end}
    write_json(out / "verdict.json", verdict_record("idla", None, config=_config_record(cfg), summary=summary))
    return summary


def _couple_rows(cfg: ExperimentConfig, x1, x2, horizon, dt, lo, hi):
    from .coupling import coupled_batch

    g = build_scale(cfg)
    tr = coupled_batch(cfg.scenario, g, cfg.c, x1, x2, horizon, dt, cfg.master_seed, hi - lo, lo,
                       rotation=cfg.rotation)
    return [(t.psi_min, t.n_phase_switches, t.invalid, t.alternation_ok()) for t in tr]


def run_couple(cfg: ExperimentConfig, out, workers: int = 1) -> dict:
    out = Path(out)
    if cfg.scenario not in ("nested", "same_ball"):
        raise ConfigError("scenario must be nested or same_ball")
    d = cfg.d
    x1 = _point(cfg.x1, d, (0.1,) + (0.0,) * (d - 1))
    x2 = _point(cfg.x2, d, (0.0, 0.2) + (0.0,) * (d - 2))
    dt = 1e-4 if cfg.dt is None else float(cfg.dt)
    horizon = float(cfg.horizons[-1])
    res = fan_out(_couple_rows, cfg.replicas, workers, cfg, x1, x2, horizon, dt)
    rows = [(r, cfg.master_seed, cfg.scenario, x[0], x[1], horizon) for r, x in enumerate(res)]
    write_csv(out / "coupling.csv", ["replica", "seed", "scenario", "min_psi", "n_phase_switches", "horizon"], rows)
    band = -10 * math.sqrt(dt)
    summary = {"band": band, "breaches": int(sum(x[0] < band for x in res)),
               "invalid": int(sum(x[2] for x in res)), "alternation_failures": int(sum(not x[3] for x in res)),
               "rotation": cfg.rotation}
    write_plot(out / "coupling.plot.csv", list(range(len(res))), [x[0] for x in res])
    write_json(out / "verdict.json", verdict_record("couple", None, config=_config_record(cfg), summary=summary))
    return summary


def hit_prob_table(cfg: ExperimentConfig) -> tuple[list, float]:
    """Rows ``(r, oracle, closed_form, abs_diff)`` along the first axis.

    The closed form is the ball potential with the inner radius chosen so that
    both agree at ``r = a/2``: the comparison is of profile shape, since the
    lattice target has no intrinsic continuum radius.
    """
    from scipy.optimize import brentq

    from .oracle import continuous_hit_prob, discrete_hit_solve

    shape = build_shape(cfg)
    a = float(cfg.a)
    R = float(cfg.exit_radius) if cfg.exit_radius is not None else a
    sol = discrete_hit_solve(shape, a, (0,) * cfg.d, exit_radius=R, enforce_b2=cfg.enforce_b2)
    rs = [r for r in range(1, int(math.ceil(R))) if r < R]
    vals = {r: sol.at(tuple([r] + [0] * (cfg.d - 1))) for r in rs}
    eps = math.nan
    is_ball = cfg.shape[0] == "ball"
    r_ref = int(a // 2)
    if is_ball and r_ref in vals and 0 < vals[r_ref] < 1:
        eps = brentq(lambda e: continuous_hit_prob(r_ref, e, R, cfg.d) - vals[r_ref], 1e-9, r_ref)
    rows = []
    for r in rs:
        cf = continuous_hit_prob(r, eps, R, cfg.d) if is_ball and math.isfinite(eps) and r >= eps else math.nan
        rows.append((r, vals[r], cf, abs(vals[r] - cf) if math.isfinite(cf) else math.nan))
    return rows, eps


def run_hit_prob(cfg: ExperimentConfig, out) -> tuple[list, float]:
    rows, eps = hit_prob_table(cfg)
    write_csv(Path(out) / "hit_prob.csv", ["r", "oracle", "closed_form", "abs_diff"], rows, decimals=10)
    write_json(Path(out) / "verdict.json",
               verdict_record("hit_prob", None, config=_config_record(cfg), matched_inner_radius=eps))
    return rows, eps
