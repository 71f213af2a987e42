"""Reflected Brownian motion on growing domains.

Two Euler schemes are provided:

* ``moving``: ``W' = W + dU`` in ``D_{t+dt} = f(t+dt) K``, reflected back
  inside when the proposal leaves the domain.
* ``rescaled``: ``X = W / f`` on the fixed shape ``K`` with
  ``dX = dU / f - (f'/f) X dt``; at a jump of ``f`` the position contracts
  by ``eta = f(t-) / f(t)``.

Reflection is the radial mirror on balls and an iterated push along the
inward normal otherwise.  Threshold crossings between grid points are
detected with the Brownian-bridge crossing probability
``exp(-2 d1 d2 / (var * dt))`` when ``bridge`` is on.

Randomness for step ``k`` uses counters ``k * B .. k * B + B - 1`` of the
replica key, ``B = normal_block(d) + 2``; retried sub-steps use a derived key.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .geometry import BALL, GrowingDomain, StarDomain, inside, normal_at, radial_gap
from .rng import draw_normals, draw_uniform, mix64, normal_block, stream_key
from .scale import POWER, ScaleFunction, evaluate, scale_at, scale_derivative

__all__ = [
    "StepRejected",
    "DiffusionConfig",
    "ExcursionLog",
    "Trajectory",
    "ExcursionRecords",
    "reflected_step",
    "rescaled_step",
    "apply_jump",
    "run_rbmg",
    "excursion_decomposition",
    "first_passage_times",
    "excursion_cycle_counts",
    "ball_hitting_curve",
    "sigma_zero",
    "derivative_energy_finite",
]

MOVING = 0
RESCALED = 1

# first-passage modes
EXIT_NORMALISED = 0
EXIT_ABSOLUTE = 1
HIT_ABSOLUTE = 2

SUB_RBM = 2
_RETRY_SALT = np.uint64(0x2545F4914F6CDD1D)


class StepRejected(RuntimeError):
    """Reflection could not bring the proposal back inside the domain."""


# ---------------------------------------------------------------------------
# jitted primitives
# ---------------------------------------------------------------------------
@njit(cache=True)
def _norm(x):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * x[i]
    return math.sqrt(s)


@njit(cache=True)
def reflect_inplace(gkind, gparams, gtable, gdims, x, s, kmax):
    """Bring ``x`` back inside ``s K``.  Returns ``(ok, push_length)``."""
    if inside(gkind, gparams, gtable, gdims, x, s):
        return True, 0.0
    if gkind == BALL:
        R = s * gparams[0]
        r = _norm(x)
        rn = 2.0 * R - r
        if rn <= 0.0:
            return False, 0.0
        f = rn / r
        for i in range(x.shape[0]):
            x[i] *= f
        if not inside(gkind, gparams, gtable, gdims, x, s):
            # landed exactly on the sphere
            for i in range(x.shape[0]):
                x[i] *= 1.0 - 1e-15
        return True, r - rn
    push = 0.0
    d = x.shape[0]
    u = np.empty(d)
    for _ in range(kmax):
        gap = radial_gap(gkind, gparams, gtable, gdims, x, s)
        for i in range(d):
            u[i] = x[i] / s
        n = normal_at(gkind, gparams, gtable, gdims, u)
        step = 2.0 * (-gap) + 1e-12 * s
        for i in range(d):
            x[i] += step * n[i]
        push += step
        if inside(gkind, gparams, gtable, gdims, x, s):
            return True, push
    return False, push


@njit(cache=True)
def _propose(scheme, skind, sc, salpha, stimes, svalues, x, t, dt, xi):
    sq = math.sqrt(dt)
    if scheme == MOVING:
        for i in range(x.shape[0]):
            x[i] += sq * xi[i]
        return scale_at(skind, sc, salpha, stimes, svalues, t + dt)
    f = scale_at(skind, sc, salpha, stimes, svalues, t)
    fp = scale_derivative(skind, sc, salpha, t)
    for i in range(x.shape[0]):
        x[i] += sq * xi[i] / f - (fp / f) * x[i] * dt
    return 1.0


@njit(cache=True)
def _jump_factor(skind, stimes, svalues, t0, t1):
    """Product of ``f(t_j-)/f(t_j)`` over jumps ``t0 < t_j <= t1``."""
    if skind == POWER:
        return 1.0
    eta = 1.0
    j = np.searchsorted(stimes, t0, side="right")
    while j < stimes.shape[0] and stimes[j] <= t1:
        eta *= svalues[j - 1] / svalues[j]
        j += 1
    return eta


@njit(cache=True)
def _advance(scheme, skind, sc, salpha, stimes, svalues, gkind, gparams, gtable, gdims,
             x, t, dt, key, k, kmax, max_halvings, xi, xold):
    """One step from ``(x, t)``; returns ``ok``.  ``x`` is updated in place."""
    d = x.shape[0]
    nb = 2 * ((d + 1) // 2)
    blk = nb + 2
    draw_normals(key, k * blk, xi)
    for i in range(d):
        xold[i] = x[i]
    s = _propose(scheme, skind, sc, salpha, stimes, svalues, x, t, dt, xi)
    ok, _ = reflect_inplace(gkind, gparams, gtable, gdims, x, s, kmax)
    if ok:
        return True
    # retry with 2, 4, ... sub-steps driven by a derived key
    rkey = mix64(key ^ _RETRY_SALT)
    for lev in range(1, max_halvings + 1):
        m = 1 << lev
        h = dt / m
        for i in range(d):
            x[i] = xold[i]
        good = True
        for j in range(m):
            draw_normals(rkey, (k << 20) + (lev << 12) + j * 8, xi)
            s = _propose(scheme, skind, sc, salpha, stimes, svalues, x, t + j * h, h, xi)
            okj, _ = reflect_inplace(gkind, gparams, gtable, gdims, x, s, kmax)
            if not okj:
                good = False
                break
        if good:
            return True
    for i in range(d):
        x[i] = xold[i]
    return False


@njit(cache=True)
def _bridge_cross(d1, d2, var, dt, u):
    # both endpoints on the same side at distances d1, d2 >= 0
    return u < math.exp(-2.0 * d1 * d2 / (var * dt))


@njit(cache=True)
def _w_radius(scheme, skind, sc, salpha, stimes, svalues, x, t):
    r = _norm(x)
    if scheme == RESCALED:
        r *= scale_at(skind, sc, salpha, stimes, svalues, t)
    return r


@njit(cache=True)
def _step_dt(skind, sc, salpha, stimes, svalues, t, dt_fixed, dt_factor):
    if dt_fixed > 0.0:
        return dt_fixed
    f = scale_at(skind, sc, salpha, stimes, svalues, t)
    return dt_factor * f * f


@njit(cache=True)
def _run_excursions(scheme, skind, sc, salpha, stimes, svalues, gkind, gparams, gtable, gdims,
                    x0, sigma0, horizon, dt_fixed, dt_factor, eps, outer, key, kmax, max_halvings,
                    bridge, checkpoints, cap, record_every, rec_cap):
    d = x0.shape[0]
    nb = 2 * ((d + 1) // 2)
    blk = nb + 2
    x = x0.copy()
    xi = np.empty(d)
    xold = np.empty(d)
    taus = np.empty(cap)
    sigmas = np.empty(cap)
    ntau = 0
    nsig = 0
    hcp = checkpoints.shape[0]
    counts = np.zeros(hcp, dtype=np.int64)
    kcp = 0
    rec_t = np.empty(rec_cap)
    rec_x = np.empty((rec_cap, d))
    nrec = 0
    t = 0.0
    k = 0
    status = 0
    phase = 0  # 0: waiting for |W| < eps, 1: waiting for |W| > outer
    r_prev = _w_radius(scheme, skind, sc, salpha, stimes, svalues, x, t)
    if rec_cap > 0:
        rec_t[0] = t
        for i in range(d):
            rec_x[0, i] = x[i]
        nrec = 1
    if sigma0 <= 0.0 and r_prev < eps:
        taus[0] = 0.0
        ntau = 1
        phase = 1
    while t < horizon:
        dt = _step_dt(skind, sc, salpha, stimes, svalues, t, dt_fixed, dt_factor)
        if t + dt > horizon:
            dt = horizon - t
        ok = _advance(scheme, skind, sc, salpha, stimes, svalues, gkind, gparams, gtable, gdims,
                      x, t, dt, key, k, kmax, max_halvings, xi, xold)
        if not ok:
            status = 1
            break
        t1 = t + dt
        if scheme == RESCALED:
            eta = _jump_factor(skind, stimes, svalues, t, t1)
            if eta != 1.0:
                for i in range(d):
                    x[i] *= eta
        r = _w_radius(scheme, skind, sc, salpha, stimes, svalues, x, t1)
        if t1 >= sigma0:
            if phase == 0:
                hit = r < eps
                if not hit and bridge and t >= sigma0:
                    hit = _bridge_cross(r_prev - eps, r - eps, 1.0, dt, draw_uniform(key, k * blk + nb))
                if hit:
                    if ntau < cap:
                        taus[ntau] = t1
                    ntau += 1
                    phase = 1
            else:
                out = r > outer
                if not out and bridge:
                    out = _bridge_cross(outer - r_prev, outer - r, 1.0, dt, draw_uniform(key, k * blk + nb + 1))
                if out:
                    if nsig < cap:
                        sigmas[nsig] = t1
                    nsig += 1
                    phase = 0
        while kcp < hcp and checkpoints[kcp] <= t1:
            counts[kcp] = ntau
            kcp += 1
        k += 1
        t = t1
        r_prev = r
        if rec_cap > 0 and k % record_every == 0 and nrec < rec_cap:
            rec_t[nrec] = t
            for i in range(d):
                rec_x[nrec, i] = x[i]
            nrec += 1
    while kcp < hcp:
        counts[kcp] = ntau
        kcp += 1
    return (taus[: min(ntau, cap)], sigmas[: min(nsig, cap)], ntau, nsig, counts, status, t, x,
            rec_t[:nrec], rec_x[:nrec])


@njit(cache=True)
def _measure(scheme, skind, sc, salpha, stimes, svalues, x, t, mode):
    r = _w_radius(scheme, skind, sc, salpha, stimes, svalues, x, t)
    if mode == EXIT_NORMALISED:
        f = scale_at(skind, sc, salpha, stimes, svalues, t)
        return r / f, 1.0 / (f * f)
    return r, 1.0


@njit(cache=True)
def _first_passage(scheme, skind, sc, salpha, stimes, svalues, gkind, gparams, gtable, gdims,
                   x0, mode, level, horizon, dt_fixed, dt_factor, key, kmax, max_halvings, bridge):
    """First time the radius crosses ``level``.  Returns ``(time, status)``,
    status 1 = event, 0 = censored at horizon, -1 = step rejected."""
    d = x0.shape[0]
    nb = 2 * ((d + 1) // 2)
    blk = nb + 2
    x = x0.copy()
    xi = np.empty(d)
    xold = np.empty(d)
    t = 0.0
    k = 0

    r_prev, _ = _measure(scheme, skind, sc, salpha, stimes, svalues, x, t, mode)
    if (mode == HIT_ABSOLUTE and r_prev < level) or (mode != HIT_ABSOLUTE and r_prev > level):
        return 0.0, 1
    while t < horizon:
        dt = _step_dt(skind, sc, salpha, stimes, svalues, t, dt_fixed, dt_factor)
        ok = _advance(scheme, skind, sc, salpha, stimes, svalues, gkind, gparams, gtable, gdims,
                      x, t, dt, key, k, kmax, max_halvings, xi, xold)
        if not ok:
            return t, -1
        t1 = t + dt
        if scheme == RESCALED:
            eta = _jump_factor(skind, stimes, svalues, t, t1)
            if eta != 1.0:
                for i in range(d):
                    x[i] *= eta
        r, var = _measure(scheme, skind, sc, salpha, stimes, svalues, x, t1, mode)
        u = draw_uniform(key, k * blk + nb)
        if mode == HIT_ABSOLUTE:
            if r < level or (bridge and _bridge_cross(r_prev - level, r - level, var, dt, u)):
                return t1, 1
        else:
            if r > level or (bridge and _bridge_cross(level - r_prev, level - r, var, dt, u)):
                return t1, 1
        r_prev = r
        t = t1
        k += 1
    return t, 0


@njit(cache=True)
def _first_passage_batch(scheme, skind, sc, salpha, stimes, svalues, gkind, gparams, gtable, gdims,
                         starts, mode, level, horizon, dt_fixed, dt_factor, seed, rep0, kmax,
                         max_halvings, bridge, sub):
    n = starts.shape[0]
    times = np.empty(n)
    status = np.empty(n, dtype=np.int8)
    for r in range(n):
        key = stream_key(seed, rep0 + r, sub)
        tt, st = _first_passage(scheme, skind, sc, salpha, stimes, svalues, gkind, gparams, gtable,
                                gdims, starts[r], mode, level, horizon, dt_fixed, dt_factor, key,
                                kmax, max_halvings, bridge)
        times[r] = tt
        status[r] = st
    return times, status


@njit(cache=True)
def _cycle_count(a, eps, d, dt, key, max_steps, bridge):
    """Frozen reflected ball of radius ``a`` started on the sphere of radius ``a/2``.

    Returns the number of trials (starts from ``a/2``) up to and including the
    one that enters ``B_eps`` before touching the outer sphere, or -1 if
    ``max_steps`` is exhausted.
    """
    nb = 2 * ((d + 1) // 2)
    blk = nb + 2
    x = np.zeros(d)
    x[0] = a / 2
    xi = np.empty(d)
    half = a / 2
    sq = math.sqrt(dt)
    trials = 1
    phase = 0  # 0: racing eps vs outer sphere, 1: returning into B_{a/2}
    r_prev = half
    for k in range(max_steps):
        draw_normals(key, k * blk, xi)
        for i in range(d):
            x[i] += sq * xi[i]
        r = _norm(x)
        touched = False
        if r >= a:
            rn = 2.0 * a - r
            for i in range(d):
                x[i] *= rn / r
            r = rn
            touched = True
        u1 = draw_uniform(key, k * blk + nb)
        u2 = draw_uniform(key, k * blk + nb + 1)
        if phase == 0:
            if r < eps or (bridge and _bridge_cross(r_prev - eps, r - eps, 1.0, dt, u1)):
                return trials
            if touched or (bridge and _bridge_cross(a - r_prev, a - r, 1.0, dt, u2)):
                phase = 1
        else:
            if r < half:
                phase = 0
                trials += 1
        r_prev = r
    return -1


@njit(cache=True)
def _cycle_batch(a, eps, d, dt, seed, rep0, n, max_steps, bridge, sub):
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        out[r] = _cycle_count(a, eps, d, dt, stream_key(seed, rep0 + r, sub), max_steps, bridge)
    return out


# ---------------------------------------------------------------------------
# Python API
# ---------------------------------------------------------------------------
@dataclass
class DiffusionConfig:
    """Simulation settings.  ``dt=None`` uses ``dt_factor * f(t)**2``."""

    dom: GrowingDomain
    horizon: float
    dt: float | None = None
    scheme: str = "moving"
    epsilon: float = 0.1
    seed: int = 0
    outer: float = 0.5
    dt_factor: float = 1e-4
    k_max: int = 20
    max_halvings: int = 8
    bridge: bool = True

    def __post_init__(self):
        if self.scheme not in ("moving", "rescaled"):
            raise ValueError("scheme must be 'moving' or 'rescaled'")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.dt_factor > 0:
            raise ValueError("dt_factor must be positive")
        if not 0 < self.epsilon < self.outer:
            raise ValueError("need 0 < epsilon < outer")
        if not self.epsilon < self.dom.f(0.0) * self.dom.shape.inner:
            raise ValueError("epsilon must be below f(0) times the inner radius")
        if self.dom.mode != "continuum":
            raise ValueError("reflected Brownian motion needs a continuum domain")

    @property
    def scheme_code(self) -> int:
        return MOVING if self.scheme == "moving" else RESCALED

    def packs(self):
        sh = self.dom.shape
        return self.dom.scale.packed() + (sh.kind, sh.params, sh.table, sh.dims)


@dataclass
class ExcursionLog:
    sigma0: float
    tau_times: np.ndarray
    sigma_times: np.ndarray
    completed_excursions: int
    truncated: bool
    n_tau: int = 0
    invalid: bool = False
    counts_at: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    scheme: str = "moving"

    def radii(self) -> np.ndarray:
        return np.sqrt((self.positions**2).sum(axis=1))


def sigma_zero(f: ScaleFunction, inner: float, eps: float) -> float:
    """First time ``D_t`` contains ``B_eps``: ``inf{t : f(t) * inner >= eps}``."""
    if evaluate(f, 0.0) * inner >= eps:
        return 0.0
    level = eps / inner
    if f.variant == "power":
        if f.alpha == 0:
            return math.inf
        return max(0.0, level ** (1.0 / f.alpha) - f.c)
    idx = np.flatnonzero(f.values >= level)
    return float(f.times[idx[0]]) if idx.size else math.inf


def derivative_energy_finite(f: ScaleFunction) -> bool:
    """Whether ``int_0^inf f'(s)^2 ds`` is finite (power profiles: ``alpha < 1/2``)."""
    if f.variant == "power":
        return f.alpha < 0.5 or f.alpha == 0
    return True


def _key(seed, replica, sub=SUB_RBM):
    return np.uint64(stream_key(np.uint64(seed), np.uint64(replica), np.uint64(sub)))


def reflected_step(x, t: float, dW, cfg: DiffusionConfig) -> np.ndarray:
    """Moving-domain step: propose ``x + dW`` in ``D_{t+dt}`` and reflect if needed."""
    kind, c, alpha, times, values, gk, gp, gt, gd = cfg.packs()
    y = np.array(x, dtype=float) + np.asarray(dW, dtype=float)
    dt = cfg.dt if cfg.dt is not None else cfg.dt_factor * evaluate(cfg.dom.scale, t) ** 2
    s = float(scale_at(kind, c, alpha, times, values, t + dt))
    ok, _ = reflect_inplace(gk, gp, gt, gd, y, s, cfg.k_max)
    if not ok:
        raise StepRejected(f"reflection failed at t={t}")
    return y


def rescaled_step(x, t: float, dU, cfg: DiffusionConfig) -> np.ndarray:
    """Euler step of ``dX = dU/f - (f'/f) X dt`` reflected at the boundary of ``K``."""
    kind, c, alpha, times, values, gk, gp, gt, gd = cfg.packs()
    dt = cfg.dt if cfg.dt is not None else cfg.dt_factor * evaluate(cfg.dom.scale, t) ** 2
    f = float(scale_at(kind, c, alpha, times, values, t))
    fp = float(scale_derivative(kind, c, alpha, t))
    x = np.asarray(x, dtype=float)
    y = x + np.asarray(dU, dtype=float) / f - (fp / f) * x * dt
    ok, _ = reflect_inplace(gk, gp, gt, gd, y, 1.0, cfg.k_max)
    if not ok:
        raise StepRejected(f"reflection failed at t={t}")
    return y


def apply_jump(x, eta: float) -> np.ndarray:
    """Contract the rescaled position at a jump of ``f``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    return eta * np.asarray(x, dtype=float)


def run_rbmg(cfg: DiffusionConfig, x0=None, replica: int = 0, checkpoints=None,
             cap: int = 1_000_000, record_every: int = 0, rec_cap: int = 100_000):
    """Simulate one replica to ``cfg.horizon``.

    Returns ``(Trajectory, ExcursionLog)``.  ``x0`` is in W-space (default
    origin).  With ``record_every > 0`` every ``record_every``-th state is
    kept (W-space for the moving scheme, K-space for the rescaled one).
    """
    d = cfg.dom.d
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float).copy()
    if not cfg.dom.shape.contains(x, cfg.dom.f(0.0)):
        raise ValueError("start outside D_0")
    if cfg.scheme == "rescaled":
        x = x / cfg.dom.f(0.0)
    s0 = sigma_zero(cfg.dom.scale, cfg.dom.shape.inner, cfg.epsilon)
    if cfg.scheme == "rescaled" and not derivative_energy_finite(cfg.dom.scale):
        warnings.warn("integral of f'^2 diverges; the rescaled scheme has no convergence guarantee here",
                      stacklevel=2)
    cps = np.asarray([] if checkpoints is None else checkpoints, dtype=float)
    kind, c, alpha, times, values, gk, gp, gt, gd = cfg.packs()
    res = _run_excursions(
        cfg.scheme_code, kind, c, alpha, times, values, gk, gp, gt, gd, x, s0, float(cfg.horizon),
        -1.0 if cfg.dt is None else float(cfg.dt), float(cfg.dt_factor), float(cfg.epsilon),
        float(cfg.outer), _key(cfg.seed, replica), int(cfg.k_max), int(cfg.max_halvings),
        bool(cfg.bridge), cps, int(cap), max(int(record_every), 1), int(rec_cap) if record_every > 0 else 0,
    )
    taus, sigmas, ntau, nsig, counts, status, _, _, rt, rx = res
    log = ExcursionLog(s0, taus.copy(), sigmas.copy(), int(nsig), bool(ntau > nsig), int(ntau),
                       bool(status), counts.copy())
    return Trajectory(rt.copy(), rx.copy(), cfg.scheme), log


@dataclass
class ExcursionRecords:
    sigma: np.ndarray
    tau: np.ndarray
    lengths: np.ndarray
    open_tail: bool


def excursion_decomposition(traj: Trajectory, a: float) -> ExcursionRecords:
    """Split a path into excursions ``B_{a/2} -> dB_a -> B_{a/2}``.

    ``sigma_0 = 0``; ``tau_k`` is the first time ``|Z| >= a`` after
    ``sigma_{k-1}``; ``sigma_k`` the first time ``|Z| < a/2`` after ``tau_k``.
    """
    r = traj.radii()
    t = traj.times
    sig = [float(t[0])] if t.size else [0.0]
    tau = []
    looking_out = True
    for ti, ri in zip(t, r):
        if looking_out and ri >= a:
            tau.append(float(ti))
            looking_out = False
        elif not looking_out and ri < a / 2:
            sig.append(float(ti))
            looking_out = True
    sig_a = np.array(sig)
    return ExcursionRecords(sig_a, np.array(tau), np.diff(sig_a), not looking_out)


def first_passage_times(dom: GrowingDomain, starts, mode: str, level: float, horizon: float, seed: int,
                        dt: float | None = None, dt_factor: float = 1e-4, scheme: str = "moving",
                        replica_offset: int = 0, bridge: bool = True, k_max: int = 20,
                        max_halvings: int = 8, sub: int = SUB_RBM):
    """First-passage times of independent replicas, one per row of ``starts`` (W-space).

    ``mode``: ``exit_normalised`` (``|W|/f > level``), ``exit`` (``|W| > level``)
    or ``hit`` (``|W| < level``).  Returns ``(times, status)``.
    """
    codes = {"exit_normalised": EXIT_NORMALISED, "exit": EXIT_ABSOLUTE, "hit": HIT_ABSOLUTE}
    if mode not in codes:
        raise ValueError(f"unknown mode {mode!r}")
    starts = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    if scheme == "rescaled":
        starts /= dom.f(0.0)
    kind, c, alpha, times, values = dom.scale.packed()
    sh = dom.shape
    return _first_passage_batch(
        MOVING if scheme == "moving" else RESCALED, kind, c, alpha, times, values,
        sh.kind, sh.params, sh.table, sh.dims, starts, codes[mode], float(level), float(horizon),
        -1.0 if dt is None else float(dt), float(dt_factor), np.uint64(seed), np.uint64(replica_offset),
        int(k_max), int(max_halvings), bool(bridge), np.uint64(sub),
    )


def excursion_cycle_counts(a: float, eps: float, d: int, replicas: int, seed: int, dt: float | None = None,
                           max_steps: int = 10**9, bridge: bool = True, replica_offset: int = 0) -> np.ndarray:
    """Number of ``a/2 -> {eps or a}`` trials until ``B_eps`` is entered, per replica,
    for reflected Brownian motion in the frozen ball ``B_a``."""
    if not 0 < eps < a / 2:
        raise ValueError("need 0 < eps < a/2")
    dt = 1e-4 * a * a if dt is None else dt
    return _cycle_batch(float(a), float(eps), int(d), float(dt), np.uint64(seed),
                        np.uint64(replica_offset), int(replicas), int(max_steps), bool(bridge), np.uint64(SUB_RBM))


def random_sphere_points(n: int, d: int, radius: float, seed: int, sub: int = 9) -> np.ndarray:
    """``n`` points uniform on the sphere of the given radius (counter-based)."""
    out = np.empty((n, d))
    buf = np.empty(d)
    for i in range(n):
        draw_normals(_key(seed, i, sub), 0, buf)
        out[i] = radius * buf / np.linalg.norm(buf)
    return out


def ball_hitting_curve(a: float, eps: float, T_grid, replicas: int, seed: int, d: int = 3,
                       r_start: float | None = None, dt: float | None = None, bridge: bool = True):
    """``P(exists s <= T : |Z_s| < eps)`` on the frozen reflected ball ``B_a`` for each ``T``.

    Starts are uniform on the sphere of radius ``r_start`` (default ``a/2``).
    Returns a list of Wilson estimates.
    """
    from .stats import wilson

    T_grid = np.asarray(T_grid, dtype=float)
    r_start = a / 2 if r_start is None else r_start
    if not eps < r_start < a:
        raise ValueError("need eps < r_start < a")
    dom = GrowingDomain(StarDomain.ball(1.0, d), ScaleFunction.constant(a), mode="continuum")
    starts = random_sphere_points(replicas, d, r_start, seed)
    horizon = float(T_grid.max()) if T_grid.size else 0.0
    if horizon <= 0:
        return [wilson(0, replicas) for _ in T_grid]
    times, status = first_passage_times(dom, starts, "hit", eps, horizon, seed,
                                        dt=1e-4 * a * a if dt is None else dt, bridge=bridge)
    hit = status == 1
    return [wilson(int((hit & (times <= T)).sum()), replicas) for T in T_grid]
