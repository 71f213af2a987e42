"""Simple random walk on growing lattice domains.

The walker at ``y`` at time ``t`` moves to a uniformly chosen neighbour of
``y`` inside ``D_{t+1}``.  All randomness for step ``t`` is the uniform
``draw_uniform(key, t)``; the neighbour index is ``floor(u * k)`` over the
available neighbours in canonical order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .geometry import (
    BALL,
    FrozenLattice,
    GrowingDomain,
    IsolatedVertex,
    StarDomain,
    contains,
    inside,
    lattice_neighbors,
)
from .rng import CounterStream, draw_uniform, stream_key
from .scale import scale_at
from .stats import Estimate, wilson

__all__ = [
    "WalkState",
    "VisitLog",
    "WalkCounts",
    "step",
    "run_walk",
    "walk_counts",
    "hit_origin_probability",
    "exit_time_samples",
    "frozen_walks",
]

OK = 0
ISOLATED = 1

# sub-stream ids
SUB_WALK = 0
SUB_FROZEN = 1


@dataclass
class WalkState:
    position: tuple
    time: int
    rng: CounterStream


@dataclass
class VisitLog:
    target: tuple
    visit_times: np.ndarray
    horizon: int
    final_position: tuple
    n_visits: int
    isolated: bool = False
    steps: int = 0

    def __post_init__(self):
        self.visit_times = np.asarray(self.visit_times, dtype=np.int64)


def step(state: WalkState, dom: GrowingDomain) -> WalkState:
    """Advance one step; neighbours are taken in ``D_{t+1}``."""
    nb = lattice_neighbors(dom, state.time + 1, state.position)
    u = state.rng.uniform(state.time)
    j = int(u * len(nb))
    return WalkState(nb[j], state.time + 1, state.rng)


# ---------------------------------------------------------------------------
# growing-domain kernel
# ---------------------------------------------------------------------------
@njit(cache=True)
def _member(gkind, gparams, gtable, gdims, y, r2, s, xbuf):
    if gkind == BALL:
        R = s * gparams[0]
        return r2 < R * R
    for i in range(y.shape[0]):
        xbuf[i] = y[i]
    return inside(gkind, gparams, gtable, gdims, xbuf, s)


@njit(cache=True)
def _walk_growing(skind, sc, salpha, stimes, svalues,
                  gkind, gparams, gtable, gdims, inner,
                  start, targets, checkpoints, key, record_cap):
    d = start.shape[0]
    m = targets.shape[0]
    h = checkpoints.shape[0]
    horizon = checkpoints[h - 1]
    counts = np.zeros((m, h), dtype=np.int64)
    last_at = -np.ones((m, h), dtype=np.int64)
    pos_at = np.zeros((h, d), dtype=np.int64)
    running = np.zeros(m, dtype=np.int64)
    last = -np.ones(m, dtype=np.int64)
    rec = np.empty(record_cap, dtype=np.int64)
    nrec = 0
    y = start.copy()
    cand = np.empty(d, dtype=np.int64)
    buf = np.empty((2 * d, d), dtype=np.int64)
    xbuf = np.empty(d)
    tr2 = np.empty(m, dtype=np.int64)
    for j in range(m):
        s2 = 0
        for i in range(d):
            s2 += targets[j, i] * targets[j, i]
        tr2[j] = s2
    r2 = 0
    for i in range(d):
        r2 += y[i] * y[i]
    status = 0
    k_cp = 0
    t = 0
    while True:
        for j in range(m):
            if tr2[j] == r2:
                same = True
                for i in range(d):
                    if y[i] != targets[j, i]:
                        same = False
                        break
                if same:
                    running[j] += 1
                    last[j] = t
                    if j == 0 and nrec < record_cap:
                        rec[nrec] = t
                        nrec += 1
        while k_cp < h and checkpoints[k_cp] == t:
            for j in range(m):
                counts[j, k_cp] = running[j]
                last_at[j, k_cp] = last[j]
            for i in range(d):
                pos_at[k_cp, i] = y[i]
            k_cp += 1
        if t >= horizon:
            break
        s = scale_at(skind, sc, salpha, stimes, svalues, t + 1.0)
        nk = 0
        deep = math.sqrt(r2) + 1.0 < s * inner
        for kdir in range(d):
            for sgn in (1, -1):
                for i in range(d):
                    cand[i] = y[i]
                cand[kdir] += sgn
                nr2 = r2 + 2 * sgn * y[kdir] + 1
                if deep or _member(gkind, gparams, gtable, gdims, cand, nr2, s, xbuf):
                    for i in range(d):
                        buf[nk, i] = cand[i]
                    nk += 1
        if nk == 0:
            status = 1
            break
        u = draw_uniform(key, t)
        jn = int(u * nk)
        if jn >= nk:
            jn = nk - 1
        for i in range(d):
            y[i] = buf[jn, i]
        r2 = 0
        for i in range(d):
            r2 += y[i] * y[i]
        t += 1
    if status == 1:
        # freeze counts for horizons not reached
        while k_cp < h:
            for j in range(m):
                counts[j, k_cp] = running[j]
                last_at[j, k_cp] = last[j]
            for i in range(d):
                pos_at[k_cp, i] = y[i]
            k_cp += 1
    return counts, last_at, pos_at, rec[:nrec], y, status, t


@dataclass
class WalkCounts:
    """Visit counts of one replica at nested horizons."""

    counts: np.ndarray  # (targets, horizons)
    last_visit: np.ndarray  # (targets, horizons), -1 if never visited
    positions: np.ndarray  # (horizons, d)
    visit_times: np.ndarray
    final_position: np.ndarray
    isolated: bool
    steps: int
    seed: int = 0
    replica: int = 0

    @property
    def final_r(self) -> float:
        return float(np.sqrt((self.final_position.astype(float) ** 2).sum()))

    def radius_at(self, k: int) -> float:
        return float(np.sqrt((self.positions[k].astype(float) ** 2).sum()))


def walk_counts(dom: GrowingDomain, start, targets, horizons, seed: int, replica: int = 0,
                record_cap: int = 0) -> WalkCounts:
    """Run one replica to ``max(horizons)`` and count visits to every target."""
    if dom.mode != "lattice":
        raise ValueError("the walk lives on a lattice domain")
    start = np.asarray(start, dtype=np.int64)
    if not contains(dom, 0.0, start):
        raise ValueError(f"start {tuple(start)} is not in D_0")
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    cps = np.asarray(horizons, dtype=np.int64)
    if cps.ndim != 1 or cps.size == 0 or np.any(cps < 0) or np.any(np.diff(cps) <= 0):
        raise ValueError("horizons must be non-negative and strictly increasing")
    kind, c, alpha, times, values = dom.scale.packed()
    sh = dom.shape
    key = np.uint64(stream_key(np.uint64(seed), np.uint64(replica), np.uint64(SUB_WALK)))
    counts, last, pos, rec, y, status, t = _walk_growing(
        kind, c, alpha, times, values, sh.kind, sh.params, sh.table, sh.dims, sh.inner,
        start, targets, cps, key, int(record_cap),
    )
    return WalkCounts(counts, last, pos, rec.copy(), y, bool(status), int(t), int(seed), int(replica))


def run_walk(dom: GrowingDomain, start, target, horizon: int, seed: int, replica: int = 0,
             record_cap: int = 1_000_000, strict: bool = False) -> VisitLog:
    """Walk for ``horizon`` steps and log the times at which ``target`` is visited.

    An isolated vertex ends the replica with ``isolated=True`` (or raises
    :class:`IsolatedVertex` when ``strict``).
    """
    wc = walk_counts(dom, start, [target], [int(horizon)], seed, replica, record_cap)
    if wc.isolated and strict:
        raise IsolatedVertex(f"walker stuck at {tuple(wc.final_position)} after {wc.steps} steps")
    return VisitLog(
        tuple(int(v) for v in target),
        wc.visit_times,
        int(horizon),
        tuple(int(v) for v in wc.final_position),
        int(wc.counts[0, 0]),
        wc.isolated,
        wc.steps,
    )


# ---------------------------------------------------------------------------
# frozen-domain kernels
# ---------------------------------------------------------------------------
@njit(cache=True)
def _frozen_one(nbr, deg, start, hit_mask, kill_mask, max_steps, key):
    """Returns (steps, outcome) with outcome 1 = hit, 2 = killed, 0 = timeout."""
    y = start
    t = 0
    while True:
        if hit_mask[y]:
            return t, 1
        if kill_mask[y]:
            return t, 2
        if t >= max_steps:
            return t, 0
        k = deg[y]
        j = int(draw_uniform(key, t) * k)
        if j >= k:
            j = k - 1
        y = nbr[y, j]
        t += 1


@njit(cache=True)
def _frozen_batch(nbr, deg, start, hit_mask, kill_mask, max_steps, seed, rep0, n, sub):
    steps = np.empty(n, dtype=np.int64)
    outcome = np.empty(n, dtype=np.int8)
    for r in range(n):
        key = stream_key(seed, rep0 + r, sub)
        s, o = _frozen_one(nbr, deg, start, hit_mask, kill_mask, max_steps, key)
        steps[r] = s
        outcome[r] = o
    return steps, outcome


def frozen_walks(lat: FrozenLattice, start, hit_mask, kill_mask, max_steps: int, replicas: int,
                 seed: int, replica_offset: int = 0):
    """Independent walks on a frozen lattice until a hit, a kill, or ``max_steps``."""
    i0 = lat.index(start)
    hit_mask = np.ascontiguousarray(hit_mask, dtype=np.bool_)
    kill_mask = np.ascontiguousarray(kill_mask, dtype=np.bool_)
    return _frozen_batch(
        lat.nbr, lat.deg, np.int64(i0), hit_mask, kill_mask, np.int64(max_steps),
        np.uint64(seed), np.uint64(replica_offset), int(replicas), np.uint64(SUB_FROZEN),
    )


def hit_origin_probability(shape: StarDomain, a: float, start, T: int, replicas: int, seed: int,
                           exit_radius: float | None = None, enforce_b2: bool = True,
                           replica_offset: int = 0) -> Estimate:
    """Estimate ``P_start(walk on the frozen a K visits 0 within T steps)``.

    With ``exit_radius`` the walk is also killed on reaching ``|y| >= exit_radius``,
    giving the hit-before-exit probability.
    """
    lat = FrozenLattice.build(shape, a, enforce_b2=enforce_b2)
    start = np.asarray(start, dtype=np.int64)
    if start not in lat:
        raise ValueError(f"start {tuple(start)} is outside the domain")
    if not np.any(start):
        raise ValueError("start must differ from the origin")
    if T < 0:
        raise ValueError("T must be non-negative")
    hit = np.zeros(len(lat), dtype=bool)
    hit[lat.index(np.zeros(lat.d, dtype=np.int64))] = True
    kill = lat.mask_outside_ball(exit_radius) if exit_radius is not None else np.zeros(len(lat), bool)
    _, outcome = frozen_walks(lat, start, hit, kill, int(T), replicas, seed, replica_offset)
    return wilson(int((outcome == 1).sum()), int(replicas))


def exit_time_samples(shape: StarDomain, a: float, start, replicas: int, seed: int,
                      statistic: str = "tau", r: float | None = None, max_steps: int | None = None,
                      enforce_b2: bool = True, replica_offset: int = 0) -> np.ndarray:
    """Normalised stopping times on the frozen walk graph of ``a K``.

    ``statistic="tau"``: first time in the complement of ``B_a``;
    ``statistic="sigma"``: first time in the closed ball of radius ``r``.
    Samples are divided by ``a**2``; censored runs are returned as ``inf``.
    """
    lat = FrozenLattice.build(shape, a, enforce_b2=enforce_b2)
    start = np.asarray(start, dtype=np.int64)
    if start not in lat:
        raise ValueError(f"start {tuple(start)} is outside the domain")
    radii = lat.radii
    if statistic == "tau":
        target = radii >= a
        if not target.any():
            raise ValueError("the domain lies inside B_a, so the walk never leaves B_a")
    elif statistic == "sigma":
        if r is None or not 0 < r < a:
            raise ValueError("sigma needs 0 < r < a")
        target = radii <= r
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    if max_steps is None:
        max_steps = int(500 * a * a) + 1000
    never = np.zeros(len(lat), dtype=bool)
    steps, outcome = frozen_walks(lat, start, target, never, max_steps, replicas, seed, replica_offset)
    out = steps.astype(float) / (a * a)
    out[outcome == 0] = np.inf
    return out
