"""Rotation coupling of reflected Brownian motions on growing balls.

``W1`` lives in ``B_{g(t)}``.  In the nested scenario ``W2`` lives in an
outer domain containing ``B_{c g(t)}``; in the same-ball scenario it lives in
``B_{g(t)}`` as well.  Both run independently until the first step with
``psi = |W2| - |W1| <= 0``.  Then, with ``O`` the rotation taking the
direction of ``W1`` to that of ``W2``:

* nested: ``W2`` is driven by ``O dU1`` until it touches its own boundary,
  after which the pair runs independently again.  With ``rotation="frozen"``
  ``O`` is fixed at the switching time; with ``rotation="tracking"`` it is
  recomputed from the pre-step directions at every step, which equalises the
  radial noise of the two processes;
* same ball: ``W2 = O W1`` from then on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import GrowingDomain, StarDomain
from .rbm import _norm, reflect_inplace
from .rng import draw_normals, stream_key
from .scale import ScaleFunction, scale_at

__all__ = ["rotation_matrix", "CoupledTrace", "coupled_run_nested", "coupled_run_same_ball", "coupled_batch"]

INDEPENDENT = 0
MIRRORED = 1

NESTED = 0
SAME_BALL = 1

SUB_COUPLE_1 = 11
SUB_COUPLE_2 = 12


@njit(cache=True)
def _rotation(x, y):
    d = x.shape[0]
    u = x / _norm(x)
    v = y / _norm(y)
    cos = 0.0
    for i in range(d):
        cos += u[i] * v[i]
    O = np.eye(d)
    w = v - cos * u
    sin = _norm(w)
    if sin < 1e-14 and cos > 0:
        return O
    if sin < 1e-14:
        # antiparallel: rotate by pi in the plane of u and the first coordinate axis not parallel to u
        for k in range(d):
            e = np.zeros(d)
            e[k] = 1.0
            w = e - u[k] * u
            nw = _norm(w)
            if nw > 1e-8:
                w = w / nw
                break
        for i in range(d):
            for j in range(d):
                O[i, j] -= 2.0 * (u[i] * u[j] + w[i] * w[j])
        return O
    w = w / sin
    for i in range(d):
        for j in range(d):
            O[i, j] += (cos - 1.0) * (u[i] * u[j] + w[i] * w[j]) + sin * (w[i] * u[j] - u[i] * w[j])
    return O


def rotation_matrix(x, y, tol: float = 1e-9) -> np.ndarray:
    """Orthogonal map fixing ``span{x, y}``-perp and rotating ``x`` onto ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ValueError("vectors must be non-zero")
    if abs(nx - ny) > tol * nx:
        raise ValueError("vectors must have equal length")
    return _rotation(x, y)


@njit(cache=True)
def _coupled(scenario, gkind, gc, galpha, gtimes, gvalues, okind, oc, oalpha, otimes, ovalues,
             sh_kind, sh_params, sh_table, sh_dims, x1_0, x2_0, horizon, dt, key1, key2,
             stop_level, max_events, kmax, tracking):
    """Returns (psi_min, n_switches, etas, taus, n_eta, n_tau, x1, x2, t_stop, status, psi_min_mirrored)."""
    d = x1_0.shape[0]
    nb = 2 * ((d + 1) // 2)
    ball_params = np.ones(1)
    dummy_t = np.zeros(1)
    dummy_d = np.zeros(1, dtype=np.int64)
    x1 = x1_0.copy()
    x2 = x2_0.copy()
    xi1 = np.empty(d)
    xi2 = np.empty(d)
    rot = np.empty(d)
    O = np.eye(d)
    etas = np.empty(max_events)
    taus = np.empty(max_events)
    n_eta = 0
    n_tau = 0
    switches = 0
    sq = math.sqrt(dt)
    psi_min = _norm(x2) - _norm(x1)
    psi_min_mirr = math.inf
    phase = INDEPENDENT
    if psi_min <= 0.0:
        phase = MIRRORED
        O = _rotation(x1, x2) if _norm(x1) > 0 and _norm(x2) > 0 else np.eye(d)
        etas[0] = 0.0
        n_eta = 1
        switches = 1
        if scenario == SAME_BALL:
            x2 = O @ x1
    t = 0.0
    k = 0
    status = 0
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    while k < n_steps:
        t1 = (k + 1) * dt
        g1 = scale_at(gkind, gc, galpha, gtimes, gvalues, t1)
        if phase == MIRRORED and scenario == NESTED and tracking and _norm(x1) > 0.0 and _norm(x2) > 0.0:
            # rotation from the pre-step positions, so it is independent of this step's noise
            O = _rotation(x1, x2)
        draw_normals(key1, k * nb, xi1)
        for i in range(d):
            x1[i] += sq * xi1[i]
        ok1, push1 = reflect_inplace(0, ball_params, dummy_t, dummy_d, x1, g1, kmax)
        if not ok1:
            status = 1
            break
        if scenario == SAME_BALL and phase == MIRRORED:
            for i in range(d):
                s = 0.0
                for j in range(d):
                    s += O[i, j] * x1[j]
                x2[i] = s
            contact2 = False
        else:
            if phase == MIRRORED:
                for i in range(d):
                    s = 0.0
                    for j in range(d):
                        s += O[i, j] * xi1[j]
                    rot[i] = s
            else:
                draw_normals(key2, k * nb, rot)
            for i in range(d):
                x2[i] += sq * rot[i]
            if scenario == SAME_BALL:
                ok2, push2 = reflect_inplace(0, ball_params, dummy_t, dummy_d, x2, g1, kmax)
            else:
                o1 = scale_at(okind, oc, oalpha, otimes, ovalues, t1)
                ok2, push2 = reflect_inplace(sh_kind, sh_params, sh_table, sh_dims, x2, o1, kmax)
            if not ok2:
                status = 1
                break
            contact2 = push2 > 0.0
        r1 = _norm(x1)
        r2 = _norm(x2)
        psi = r2 - r1
        if psi < psi_min:
            psi_min = psi
        if phase == MIRRORED and psi < psi_min_mirr:
            psi_min_mirr = psi
        if phase == INDEPENDENT and psi <= 0.0:
            phase = MIRRORED
            O = _rotation(x1, x2) if r1 > 0 and r2 > 0 else np.eye(d)
            if n_eta < max_events:
                etas[n_eta] = t1
            n_eta += 1
            switches += 1
            if scenario == SAME_BALL:
                for i in range(d):
                    s = 0.0
                    for j in range(d):
                        s += O[i, j] * x1[j]
                    x2[i] = s
        elif phase == MIRRORED and scenario == NESTED and contact2:
            phase = INDEPENDENT
            if n_tau < max_events:
                taus[n_tau] = t1
            n_tau += 1
            switches += 1
        t = t1
        k += 1
        if stop_level > 0.0 and r2 > stop_level:
            break
    return (psi_min, switches, etas[: min(n_eta, max_events)], taus[: min(n_tau, max_events)],
            n_eta, n_tau, x1, x2, t, status, psi_min_mirr)


@dataclass
class CoupledTrace:
    scenario: str
    psi_min: float
    psi_min_mirrored: float
    n_phase_switches: int
    eta_times: np.ndarray
    tau_times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    t_end: float
    invalid: bool
    horizon: float
    dt: float

    @property
    def band(self) -> float:
        return -10.0 * math.sqrt(self.dt)

    def alternation_ok(self) -> bool:
        """``eta_1 <= tau_1 <= eta_2 <= ...`` (nested) or a single eta (same ball)."""
        e, t = self.eta_times, self.tau_times
        if len(t) > len(e) or len(e) > len(t) + 1:
            return False
        seq = np.empty(len(e) + len(t))
        seq[0::2] = e
        seq[1::2] = t
        return bool(np.all(np.diff(seq) >= 0))


def _keys(seed, replica):
    k1 = np.uint64(stream_key(np.uint64(seed), np.uint64(replica), np.uint64(SUB_COUPLE_1)))
    k2 = np.uint64(stream_key(np.uint64(seed), np.uint64(replica), np.uint64(SUB_COUPLE_2)))
    return k1, k2


def _run(scenario, g, outer_dom, x1, x2, horizon, dt, seed, replica, stop_level, max_events, k_max,
         rotation="tracking"):
    if rotation not in ("frozen", "tracking"):
        raise ValueError("rotation must be 'frozen' or 'tracking'")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.linalg.norm(x1) > np.linalg.norm(x2) + 1e-12:
        raise ValueError("need |x1| <= |x2|")
    g0 = float(g(0.0))
    if np.linalg.norm(x1) >= g0:
        raise ValueError("x1 must lie in B_{g(0)}")
    if outer_dom is None:
        sh = StarDomain.ball(1.0, len(x1))
        oscale = g
    else:
        sh, oscale = outer_dom.shape, outer_dom.scale
    if not sh.contains(x2, float(oscale(0.0))):
        raise ValueError("x2 must lie in the outer domain")
    k1, k2 = _keys(seed, replica)
    res = _coupled(
        scenario, *g.packed(), *oscale.packed(), sh.kind, sh.params, sh.table, sh.dims,
        x1, x2, float(horizon), float(dt), k1, k2, float(stop_level), int(max_events), int(k_max),
        rotation == "tracking",
    )
    psi_min, sw, etas, taus, n_eta, n_tau, y1, y2, t, status, pmm = res
    return CoupledTrace(
        "nested" if scenario == NESTED else "same_ball", float(psi_min), float(pmm), int(sw),
        etas.copy(), taus.copy(), y1.copy(), y2.copy(), float(t), bool(status), float(horizon), float(dt),
    )


def coupled_run_nested(g: ScaleFunction, c: float, x1, x2, horizon: float, dt: float = 1e-4, seed: int = 0,
                       replica: int = 0, outer_dom: GrowingDomain | None = None, stop_level: float = 0.0,
                       max_events: int = 100_000, k_max: int = 20, rotation: str = "tracking") -> CoupledTrace:
    """Inner process on ``B_{g(t)}``, outer on ``outer_dom`` (default ``B_{c g(t)}``)."""
    if not c > 1:
        raise ValueError("need c > 1")
    d = len(np.asarray(x1))
    if outer_dom is None:
        outer_dom = GrowingDomain(StarDomain.ball(float(c), d), g, mode="continuum")
    elif outer_dom.shape.inner < c:
        raise ValueError("outer domain must contain B_{c g(t)}")
    return _run(NESTED, g, outer_dom, x1, x2, horizon, dt, seed, replica, stop_level, max_events, k_max,
                rotation)


def coupled_run_same_ball(g: ScaleFunction, x1, x2, horizon: float, dt: float = 1e-4, seed: int = 0,
                          replica: int = 0, stop_level: float = 0.0, max_events: int = 100_000,
                          k_max: int = 20) -> CoupledTrace:
    """Both processes on ``B_{g(t)}``; after ``eta_1`` the second is the rotated first."""
    if np.linalg.norm(np.asarray(x2, dtype=float)) >= float(g(0.0)):
        raise ValueError("x2 must lie in B_{g(0)}")
    return _run(SAME_BALL, g, None, x1, x2, horizon, dt, seed, replica, stop_level, max_events, k_max)


def coupled_batch(scenario: str, g: ScaleFunction, c: float, x1, x2, horizon: float, dt: float, seed: int,
                  replicas: int, replica_offset: int = 0, stop_level: float = 0.0,
                  rotation: str = "tracking") -> list[CoupledTrace]:
    out = []
    for r in range(replica_offset, replica_offset + replicas):
        if scenario == "nested":
            out.append(coupled_run_nested(g, c, x1, x2, horizon, dt, seed, r, stop_level=stop_level,
                                          rotation=rotation))
        else:
            out.append(coupled_run_same_ball(g, x1, x2, horizon, dt, seed, r, stop_level=stop_level))
    return out
