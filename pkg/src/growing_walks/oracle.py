"""Exact reference values: ball potentials and lattice linear solves."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .geometry import FrozenLattice, StarDomain

__all__ = [
    "continuous_hit_prob",
    "excursion_rate",
    "mean_exit_time_ball",
    "mean_hit_time_reflected_ball",
    "excursion_frequency",
    "HitSolution",
    "discrete_hit_solve",
    "finite_horizon_hit",
    "stationary_distribution",
    "SingularSystem",
]


class SingularSystem(ValueError):
    """Some sites cannot reach the boundary set, so the solve is singular."""


def continuous_hit_prob(r: float, eps: float, a: float, d: int) -> float:
    """Probability that Brownian motion from radius ``r`` reaches ``B_eps`` before ``dB_a``."""
    if d < 3:
        raise ValueError("d must be at least 3")
    if not 0 < eps < a:
        raise ValueError("need 0 < eps < a")
    if not eps <= r <= a:
        raise ValueError("need eps <= r <= a")
    if r == eps:
        return 1.0
    if r == a:
        return 0.0
    p = 2 - d
    return (r**p - a**p) / (eps**p - a**p)


def excursion_rate(a: float, eps: float, d: int) -> float:
    """Per-excursion probability of reaching ``B_eps`` from ``dB_{a/2}`` before ``dB_a``."""
    if eps > a / 2:
        raise ValueError("need eps <= a/2")
    return continuous_hit_prob(a / 2, eps, a, d)


def mean_exit_time_ball(r: float, R: float, d: int) -> float:
    """Expected exit time of standard Brownian motion from ``B_R`` started at radius ``r``."""
    if not 0 <= r <= R:
        raise ValueError("need 0 <= r <= R")
    return (R * R - r * r) / d


def mean_hit_time_reflected_ball(r: float, eps: float, R: float, d: int) -> float:
    """Expected time for reflected Brownian motion in ``B_R`` to reach ``B_eps`` from radius ``r``."""
    if not 0 < eps <= r <= R:
        raise ValueError("need 0 < eps <= r <= R")
    p = 2 - d
    return (2.0 / d) * (R**d * (r**p - eps**p) / p - (r * r - eps * eps) / 2.0)


def excursion_frequency(eps: float, R: float, d: int, outer: float = 0.5) -> float:
    """Long-run rate of ``B_eps -> dB_outer -> B_eps`` cycles of reflected Brownian motion in ``B_R``.

    One cycle is the mean hitting time of ``B_eps`` from the sphere of radius
    ``outer`` plus the mean exit time of ``B_outer`` from the sphere of radius ``eps``.
    """
    if not 0 < eps < outer <= R:
        raise ValueError("need 0 < eps < outer <= R")
    return 1.0 / (mean_hit_time_reflected_ball(outer, eps, R, d) + (outer * outer - eps * eps) / d)


# ---------------------------------------------------------------------------
# lattice solves
# ---------------------------------------------------------------------------
@dataclass
class HitSolution:
    lattice: FrozenLattice
    values: np.ndarray
    residual: float
    method: str
    mode: str

    def at(self, point) -> float:
        return float(self.values[self.lattice.index(point)])


def _adjacency(lat: FrozenLattice) -> sparse.csr_matrix:
    n = len(lat)
    rows = np.repeat(np.arange(n), lat.deg)
    cols = np.concatenate([lat.nbr[i, : lat.deg[i]] for i in range(n)]) if n > 1 else np.zeros(0, int)
    return sparse.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))


def _check_reachable(lat: FrozenLattice, boundary: np.ndarray) -> None:
    seen = boundary.copy()
    q = deque(np.flatnonzero(boundary).tolist())
    while q:
        i = q.popleft()
        for j in lat.nbr[i, : lat.deg[i]]:
            if not seen[j]:
                seen[j] = True
                q.append(j)
    if not seen.all():
        raise SingularSystem(f"{int((~seen).sum())} sites cannot reach the boundary set")


def _exit_mask(lat: FrozenLattice, exit_radius, exit_mask) -> np.ndarray:
    if exit_mask is not None:
        return np.asarray(exit_mask, dtype=bool)
    if exit_radius is None:
        return np.zeros(len(lat), dtype=bool)
    return lat.mask_outside_ball(exit_radius)


def _solve(M, rhs, method: str, tol: float):
    if method == "direct":
        return spla.spsolve(M.tocsc(), rhs)
    if method == "cg":
        x, info = spla.cg(M, rhs, rtol=tol * 1e-3, atol=0.0, maxiter=100000)
        if info != 0:
            raise RuntimeError(f"conjugate gradient did not converge (info={info})")
        return x
    raise ValueError(f"unknown method {method!r}")


def discrete_hit_solve(shape: StarDomain, a: float, target=None, mode: str = "before_exit",
                       exit_radius: float | None = None, exit_mask=None, method: str = "direct",
                       enforce_b2: bool = True, tol: float = 1e-10, max_iter: int = 10_000_000) -> HitSolution:
    """Harmonic solve on the walk graph of the frozen domain ``a K``.

    ``mode="before_exit"``: ``h = 1`` at ``target``, ``0`` on the exit set,
    harmonic elsewhere.  ``mode="exit_time"``: expected number of steps to
    reach the exit set.  ``method`` is ``direct``, ``cg`` or ``iterate``
    (fixed-point iteration of the transition operator).
    """
    lat = FrozenLattice.build(shape, a, enforce_b2=enforce_b2)
    n = len(lat)
    exit_ = _exit_mask(lat, exit_radius, exit_mask)
    fixed = exit_.copy()
    bval = np.zeros(n)
    if mode == "before_exit":
        if target is None:
            raise ValueError("before_exit needs a target")
        if target not in lat:
            raise ValueError(f"target {tuple(target)} is outside the domain")
        ti = lat.index(target)
        fixed[ti] = True
        bval[ti] = 1.0
        exit_[ti] = False
    elif mode == "exit_time":
        if not exit_.any():
            raise SingularSystem("expected exit time needs a non-empty exit set")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    _check_reachable(lat, fixed)
    A = _adjacency(lat)
    deg = lat.deg.astype(float)
    free = ~fixed
    src = np.ones(n) if mode == "exit_time" else np.zeros(n)
    vals = bval.copy()
    if free.any():
        if method == "iterate":
            P = sparse.diags(1.0 / np.maximum(deg, 1)) @ A
            v = vals.copy()
            for _ in range(max_iter):
                new = P @ v + src
                new[fixed] = bval[fixed]
                if np.max(np.abs(new - v)) < tol * 1e-3:
                    v = new
                    break
                v = new
            else:
                raise RuntimeError("fixed-point iteration did not converge")
            vals = v
        else:
            Aff = A[free][:, free]
            Afb = A[free][:, fixed]
            M = sparse.diags(deg[free]) - Aff
            rhs = Afb @ bval[fixed] + deg[free] * src[free]
            vals[free] = _solve(M.tocsr(), rhs, method, tol)
    # residual in averaging form on free sites
    if free.any():
        avg = (A @ vals) / np.maximum(deg, 1)
        res = float(np.max(np.abs((vals - avg - src)[free])))
        scale = max(1.0, float(np.max(np.abs(vals))))
        if res > tol * scale:
            raise RuntimeError(f"residual {res:.3e} above tolerance")
    else:
        res = 0.0
    return HitSolution(lat, vals, res, method, mode)


def finite_horizon_hit(shape: StarDomain, a: float, target, T: int, exit_radius: float | None = None,
                       enforce_b2: bool = True) -> HitSolution:
    """``P_y(target reached within T steps before the exit set)`` by ``T`` matrix-vector products."""
    lat = FrozenLattice.build(shape, a, enforce_b2=enforce_b2)
    exit_ = _exit_mask(lat, exit_radius, None)
    ti = lat.index(target)
    exit_[ti] = False
    A = _adjacency(lat)
    P = (sparse.diags(1.0 / np.maximum(lat.deg, 1)) @ A).tocsr()
    v = np.zeros(len(lat))
    v[ti] = 1.0
    for _ in range(int(T)):
        v = P @ v
        v[ti] = 1.0
        v[exit_] = 0.0
    return HitSolution(lat, v, 0.0, "value_iteration", "finite_horizon")


def stationary_distribution(lat: FrozenLattice) -> np.ndarray:
    """Stationary law ``deg / sum(deg)`` of the walk on a connected frozen graph."""
    deg = lat.deg.astype(float)
    return deg / deg.sum()
