"""Internal DLA with Poisson injection at the origin.

Particles arrive at the epochs of a Poisson process with intensity
``lambda(t)`` and perform continuous-time nearest-neighbour walks at rate
``v``.  A particle settles at the first site it visits that is not yet in
the cluster; the first particle therefore settles at the origin.  Events are
processed in time order from one binary heap.

Particle ``i`` draws its ``j``-th holding time and direction from counters
``2j`` and ``2j + 1`` of its own stream, so a timeline depends only on the
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import gamma

from .geometry import IsolatedVertex, unit_vectors
from .rng import draw_uniform, stream_key
from .srw import VisitLog

__all__ = [
    "Intensity",
    "IdlaTimeline",
    "grow",
    "sequential_idla",
    "shape_deviation",
    "kappa_d",
    "j_random",
    "j_random_steps",
    "u_solver",
    "u_comparison_holds",
    "srw_on_idla",
]

CONST = 0
POWER = 1
TABLE = 2

SUB_INJECT = 21
SUB_PARTICLE = 22
SUB_IDLA_WALK = 23


def kappa_d(d: int) -> float:
    """Radius of the ball of unit volume in ``R^d``."""
    return float((gamma(d / 2 + 1) / math.pi ** (d / 2)) ** (1.0 / d))


@dataclass(frozen=True)
class Intensity:
    """Injection intensity ``lambda(t)`` with cumulative ``g(t)``.

    ``const(rate)``: ``lambda = rate``; ``power(A, B)``: ``lambda = A t**B``;
    ``table(times, cumulative)``: piecewise-linear cumulative intensity.
    """

    kind: int
    A: float = 1.0
    B: float = 0.0
    times: np.ndarray = field(default_factory=lambda: np.zeros(1))
    cumulative: np.ndarray = field(default_factory=lambda: np.zeros(1))

    @classmethod
    def const(cls, rate: float) -> "Intensity":
        if not rate > 0:
            raise ValueError("rate must be positive")
        return cls(CONST, float(rate))

    @classmethod
    def power(cls, A: float, B: float) -> "Intensity":
        if not A > 0 or B < 0:
            raise ValueError("need A > 0 and B >= 0")
        return cls(POWER, float(A), float(B))

    @classmethod
    def table(cls, times, cumulative) -> "Intensity":
        t = np.asarray(times, dtype=float)
        G = np.asarray(cumulative, dtype=float)
        if t[0] != 0 or G[0] != 0 or np.any(np.diff(t) <= 0) or np.any(np.diff(G) <= 0):
            raise ValueError("need increasing times and cumulative values starting at (0, 0)")
        return cls(TABLE, times=t, cumulative=G)

    def cumulative_at(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == CONST:
            return self.A * t
        if self.kind == POWER:
            return self.A * np.maximum(t, 0) ** (self.B + 1) / (self.B + 1)
        return np.interp(t, self.times, self.cumulative, right=np.inf)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == CONST:
            return np.full_like(t, self.A)
        if self.kind == POWER:
            return self.A * t**self.B
        slopes = np.diff(self.cumulative) / np.diff(self.times)
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]


@njit(cache=True)
def _inverse_cumulative(kind, A, B, times, cum, e):
    if kind == CONST:
        return e / A
    if kind == POWER:
        return ((B + 1.0) * e / A) ** (1.0 / (B + 1.0))
    j = np.searchsorted(cum, e, side="right") - 1
    if j >= cum.shape[0] - 1:
        return math.inf
    return times[j] + (e - cum[j]) * (times[j + 1] - times[j]) / (cum[j + 1] - cum[j])


@njit(cache=True)
def _heap_push(ht, hid, n, t, i):
    k = n
    ht[k] = t
    hid[k] = i
    while k > 0:
        p = (k - 1) >> 1
        if ht[p] < ht[k] or (ht[p] == ht[k] and hid[p] < hid[k]):
            break
        ht[p], ht[k] = ht[k], ht[p]
        hid[p], hid[k] = hid[k], hid[p]
        k = p
    return n + 1


@njit(cache=True)
def _heap_pop(ht, hid, n):
    t = ht[0]
    i = hid[0]
    n -= 1
    ht[0] = ht[n]
    hid[0] = hid[n]
    k = 0
    while True:
        l = 2 * k + 1
        if l >= n:
            break
        c = l
        r = l + 1
        if r < n and (ht[r] < ht[l] or (ht[r] == ht[l] and hid[r] < hid[l])):
            c = r
        if ht[k] < ht[c] or (ht[k] == ht[c] and hid[k] < hid[c]):
            break
        ht[k], ht[c] = ht[c], ht[k]
        hid[k], hid[c] = hid[c], hid[k]
        k = c
    return t, i, n


@njit(cache=True)
def _grow(kind, A, B, times, cum, v, horizon, max_settled, d, R, seed, cap):
    side = 2 * R + 1
    ncell = side**d
    settle = np.full(ncell, np.inf)
    strides = np.empty(d, dtype=np.int64)
    s = 1
    for k in range(d - 1, -1, -1):
        strides[k] = s
        s *= side
    origin = 0
    for k in range(d):
        origin += R * strides[k]
    pos = np.empty(cap, dtype=np.int64)  # flat grid index of each particle
    coord = np.zeros((cap, d), dtype=np.int64)
    njump = np.zeros(cap, dtype=np.int64)
    keys = np.empty(cap, dtype=np.uint64)
    ht = np.empty(cap)
    hid = np.empty(cap, dtype=np.int64)
    hn = 0
    s_sites = np.empty((max_settled, d), dtype=np.int64)
    s_times = np.empty(max_settled)
    inj = np.empty(cap)
    M = 0
    N = 0
    inj_key = stream_key(seed, 0, SUB_INJECT)
    e = -math.log(1.0 - draw_uniform(inj_key, 0))
    next_inj = _inverse_cumulative(kind, A, B, times, cum, e)
    status = 0
    t_end = horizon
    while True:
        t_jump = ht[0] if hn > 0 else math.inf
        if next_inj <= t_jump:
            t = next_inj
            if t > horizon:
                break
            if N >= cap:
                status = 2
                t_end = t
                break
            i = N
            inj[N] = t
            N += 1
            e += -math.log(1.0 - draw_uniform(inj_key, N))
            next_inj = _inverse_cumulative(kind, A, B, times, cum, e)
            keys[i] = stream_key(seed, i, SUB_PARTICLE)
            pos[i] = origin
            if settle[origin] == np.inf:
                settle[origin] = t
                s_times[M] = t
                for k in range(d):
                    s_sites[M, k] = 0
                M += 1
                if M >= max_settled:
                    t_end = t
                    break
            else:
                dt = -math.log(1.0 - draw_uniform(keys[i], 0)) / v
                hn = _heap_push(ht, hid, hn, t + dt, i)
        else:
            if t_jump > horizon:
                break
            t, i, hn = _heap_pop(ht, hid, hn)
            j = njump[i]
            u = draw_uniform(keys[i], 2 * j + 1)
            dirn = int(u * 2 * d)
            if dirn >= 2 * d:
                dirn = 2 * d - 1
            axis = dirn >> 1
            sgn = 1 if (dirn & 1) == 0 else -1
            coord[i, axis] += sgn
            if abs(coord[i, axis]) >= R:
                status = 1
                t_end = t
                break
            pos[i] += sgn * strides[axis]
            njump[i] = j + 1
            p = pos[i]
            if settle[p] == np.inf:
                settle[p] = t
                s_times[M] = t
                for k in range(d):
                    s_sites[M, k] = coord[i, k]
                M += 1
                if M >= max_settled:
                    t_end = t
                    break
            else:
                dt = -math.log(1.0 - draw_uniform(keys[i], 2 * (j + 1))) / v
                hn = _heap_push(ht, hid, hn, t + dt, i)
    return s_sites[:M], s_times[:M], inj[:N], status, t_end


@dataclass
class IdlaTimeline:
    """Settled sites with settle times, and injection times."""

    sites: np.ndarray
    settle_times: np.ndarray
    injection_times: np.ndarray
    d: int
    v: float
    intensity: Intensity
    horizon: float
    seed: int = 0

    def M(self, t: float) -> int:
        return int(np.searchsorted(self.settle_times, t, side="right"))

    def N(self, t: float) -> int:
        return int(np.searchsorted(self.injection_times, t, side="right"))

    @property
    def M_samples(self) -> np.ndarray:
        """``(t, M_t)`` at every settle event."""
        return np.column_stack([self.settle_times, np.arange(1, self.settle_times.size + 1)])

    def settled_at(self, t: float) -> np.ndarray:
        return self.sites[: self.M(t)]

    def mt_le_nt(self) -> bool:
        """``M_t <= N_t`` at every settle and injection time."""
        ts = np.concatenate([self.settle_times, self.injection_times])
        M = np.searchsorted(self.settle_times, ts, side="right")
        N = np.searchsorted(self.injection_times, ts, side="right")
        return bool(np.all(M <= N))


def grow(intensity: Intensity, v: float, horizon: float, seed: int, d: int = 3,
         max_settled: int | None = None, radius: int | None = None) -> IdlaTimeline:
    """Simulate the cluster up to ``horizon`` or until ``max_settled`` sites settle."""
    if not v > 0:
        raise ValueError("rate v must be positive")
    if max_settled is None:
        mean = float(intensity.cumulative_at(horizon))
        if not math.isfinite(mean):
            raise ValueError("horizon beyond the tabulated intensity")
        max_settled = int(mean + 10 * math.sqrt(mean) + 20)
    cap = int(4 * max_settled + 1000)
    if radius is None:
        radius = int(math.ceil(2 * kappa_d(d) * max_settled ** (1.0 / d))) + 10
    sites, times, inj, status, t_end = _grow(
        intensity.kind, intensity.A, intensity.B, intensity.times, intensity.cumulative, float(v),
        float(horizon), int(max_settled), int(d), int(radius), np.uint64(seed), cap,
    )
    if status == 1:
        raise RuntimeError(f"a particle left the simulation box of radius {radius}; pass a larger radius")
    if status == 2:
        raise RuntimeError("too many particles in flight; increase max_settled")
    return IdlaTimeline(sites.copy(), times.copy(), inj.copy(), d, float(v), intensity,
                        float(min(horizon, t_end)), int(seed))


@njit(cache=True)
def _sequential(n, d, R, key):
    side = 2 * R + 1
    occ = np.zeros(side**d, dtype=np.bool_)
    strides = np.empty(d, dtype=np.int64)
    s = 1
    for k in range(d - 1, -1, -1):
        strides[k] = s
        s *= side
    origin = 0
    for k in range(d):
        origin += R * strides[k]
    out = np.zeros((n, d), dtype=np.int64)
    x = np.zeros(d, dtype=np.int64)
    c = 0
    for m in range(n):
        p = origin
        for k in range(d):
            x[k] = 0
        while occ[p]:
            dirn = int(draw_uniform(key, c) * 2 * d)
            c += 1
            if dirn >= 2 * d:
                dirn = 2 * d - 1
            axis = dirn >> 1
            sgn = 1 if (dirn & 1) == 0 else -1
            x[axis] += sgn
            p += sgn * strides[axis]
        occ[p] = True
        for k in range(d):
            out[m, k] = x[k]
    return out


def sequential_idla(n: int, d: int, seed: int, replica: int = 0) -> np.ndarray:
    """Classical IDLA: particles released one at a time, each walking until it settles."""
    R = int(math.ceil(2 * kappa_d(d) * n ** (1.0 / d))) + 10
    key = np.uint64(stream_key(np.uint64(seed), np.uint64(replica), np.uint64(SUB_PARTICLE)))
    return _sequential(int(n), int(d), R, key)


def _ratios(sites: np.ndarray, d: int) -> tuple[float, float]:
    M = len(sites)
    if M == 0:
        raise ValueError("need at least one settled site")
    R0 = kappa_d(d) * M ** (1.0 / d)
    occupied = {tuple(p) for p in sites.tolist()}
    nearest = math.inf
    for e in unit_vectors(d):
        for q in (sites + e).tolist():
            if tuple(q) not in occupied:
                nearest = min(nearest, math.sqrt(sum(c * c for c in q)))
    outer = float(np.sqrt((sites.astype(float) ** 2).sum(axis=1)).max())
    return nearest / R0, outer / R0


def shape_deviation(timeline: IdlaTimeline | np.ndarray, t: float | None = None, d: int | None = None) -> dict:
    """``inner_ratio``: largest ``rho`` with ``B_{rho kappa M^{1/d}}`` inside the cluster;
    ``outer_ratio``: smallest ``R`` with the cluster inside the closed ball of radius ``R kappa M^{1/d}``."""
    if isinstance(timeline, IdlaTimeline):
        sites = timeline.settled_at(math.inf if t is None else t)
        d = timeline.d
    else:
        sites = np.asarray(timeline, dtype=np.int64)
        d = sites.shape[1] if d is None else d
    inner, outer = _ratios(sites, d)
    return {"inner_ratio": inner, "outer_ratio": outer, "M": int(len(sites))}


def j_random_steps(jump_times, values, horizon: float, start: float = 1.0) -> tuple[float, bool]:
    """Exact ``int_start^horizon 1/M_t dt`` for a right-continuous step function.

    ``M_t = values[k]`` on ``[jump_times[k], jump_times[k+1])`` and ``0`` before
    ``jump_times[0]``.  Stretches with ``M_t = 0`` count with ``M = 1`` and are flagged.
    """
    if horizon < start:
        raise ValueError("horizon must be at least the lower limit")
    t = np.concatenate([[-np.inf], np.asarray(jump_times, dtype=float)])
    m = np.concatenate([[0.0], np.asarray(values, dtype=float)])
    ends = np.concatenate([t[1:], [np.inf]])
    lo = np.clip(t, start, horizon)
    hi = np.clip(ends, start, horizon)
    width = hi - lo
    floored = bool(np.any((m <= 0) & (width > 0)))
    return float(np.sum(width / np.maximum(m, 1.0))), floored


def j_random(timeline: IdlaTimeline, horizon: float | None = None) -> tuple[float, bool]:
    """``int_1^horizon M_t^{-1} dt`` for the cluster counting process."""
    H = timeline.horizon if horizon is None else horizon
    M = np.arange(1, timeline.settle_times.size + 1)
    return j_random_steps(timeline.settle_times, M, H)


def u_solver(g, c: float, d: int, t: float, tol: float = 1e-12) -> float:
    """``sup{u >= 0 : g(t - c u^{2/d}) >= u}`` with ``g = 0`` on negative times."""
    gt = float(g(t))
    if not gt > 0:
        raise ValueError("g(t) must be positive")
    if c == 0:
        return gt

    def h(u):
        s = t - c * u ** (2.0 / d)
        return (float(g(s)) if s >= 0 else 0.0) - u

    lo, hi = 0.0, gt
    if h(hi) >= 0:
        return hi
    while hi - lo > tol * (1.0 + gt):
        mid = 0.5 * (lo + hi)
        if h(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def u_comparison_holds(g, c: float, d: int, t_grid) -> np.ndarray:
    """Check ``u(2t) >= min(g(t), (t/c)^{d/2})`` at every grid point."""
    out = []
    for t in t_grid:
        lower = min(float(g(t)), (t / c) ** (d / 2.0))
        out.append(u_solver(g, c, d, 2 * t) >= lower * (1 - 1e-9))
    return np.array(out)


# ---------------------------------------------------------------------------
# walks on a frozen cluster realisation
# ---------------------------------------------------------------------------
@njit(cache=True)
def _walk_cluster(settle, R, d, start_time, time_scale, target, horizon, key, record_cap):
    side = 2 * R + 1
    strides = np.empty(d, dtype=np.int64)
    s = 1
    for k in range(d - 1, -1, -1):
        strides[k] = s
        s *= side
    y = np.zeros(d, dtype=np.int64)
    p = 0
    for k in range(d):
        p += R * strides[k]
    tflat = 0
    for k in range(d):
        tflat += (target[k] + R) * strides[k]
    rec = np.empty(record_cap, dtype=np.int64)
    nrec = 0
    count = 0
    buf = np.empty(2 * d, dtype=np.int64)
    status = 0
    t = 0
    while True:
        if p == tflat:
            count += 1
            if nrec < record_cap:
                rec[nrec] = t
                nrec += 1
        if t >= horizon:
            break
        tau = start_time + (t + 1) * time_scale
        nk = 0
        for dirn in range(2 * d):
            axis = dirn >> 1
            sgn = 1 if (dirn & 1) == 0 else -1
            c = y[axis] + sgn
            if c <= -R or c >= R:
                continue
            q = p + sgn * strides[axis]
            if settle[q] <= tau:
                buf[nk] = dirn
                nk += 1
        if nk == 0:
            status = 1
            break
        j = int(draw_uniform(key, t) * nk)
        if j >= nk:
            j = nk - 1
        dirn = buf[j]
        axis = dirn >> 1
        sgn = 1 if (dirn & 1) == 0 else -1
        y[axis] += sgn
        p += sgn * strides[axis]
        t += 1
    return count, rec[:nrec], y, status, t


def srw_on_idla(timeline: IdlaTimeline, target, horizon_steps: int, seed: int, replica: int = 0,
                time_scale: float = 1.0, start_time: float | None = None, record_cap: int = 1_000_000,
                strict: bool = True) -> VisitLog:
    """Walk on the cluster, step ``n`` seeing the sites settled by ``start_time + n * time_scale``.

    ``start_time`` defaults to the second settle time, the first moment the
    origin has a settled neighbour.
    """
    if timeline.sites.shape[0] == 0:
        raise ValueError("the cluster is empty")
    d = timeline.d
    if start_time is None:
        start_time = timeline.settle_times[min(1, timeline.settle_times.size - 1)]
    t0 = float(start_time)
    if t0 < timeline.settle_times[0]:
        raise ValueError("the origin is not settled at the start time")
    R = int(np.abs(timeline.sites).max()) + 2
    side = 2 * R + 1
    grid = np.full(side**d, np.inf)
    strides = side ** np.arange(d - 1, -1, -1)
    grid[(timeline.sites + R) @ strides] = timeline.settle_times
    target = np.asarray(target, dtype=np.int64)
    key = np.uint64(stream_key(np.uint64(seed), np.uint64(replica), np.uint64(SUB_IDLA_WALK)))
    count, rec, y, status, t = _walk_cluster(grid, R, d, t0, float(time_scale), target, int(horizon_steps),
                                             key, int(record_cap))
    if status and strict:
        raise IsolatedVertex(f"walker stuck at {tuple(y)} after {t} steps")
    return VisitLog(tuple(int(v) for v in target), rec.copy(), int(horizon_steps),
                    tuple(int(v) for v in y), int(count), bool(status), int(t))
