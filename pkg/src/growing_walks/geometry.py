"""Star-shaped domains and the growing domains ``D_t = f(t) K``."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import ndimage

from .scale import ScaleFunction, evaluate

__all__ = [
    "IsolatedVertex",
    "StarDomain",
    "GrowingDomain",
    "FrozenLattice",
    "contains",
    "lattice_neighbors",
    "lattice_sites",
    "inner_boundary",
    "inward_normal",
    "connectivity_check",
    "is_connected",
    "unit_vectors",
]

BALL = 0
ELLIPSOID = 1
RADIAL_TABLE = 2


class IsolatedVertex(RuntimeError):
    """The walker has no available neighbour."""


def unit_vectors(d: int) -> np.ndarray:
    """Canonical neighbour offsets ``+e1, -e1, ..., +ed, -ed``."""
    out = np.zeros((2 * d, d), dtype=np.int64)
    for k in range(d):
        out[2 * k, k] = 1
        out[2 * k + 1, k] = -1
    return out


# ---------------------------------------------------------------------------
# jitted shape primitives
# ---------------------------------------------------------------------------
@njit(cache=True)
def _angles(u, out):
    # hyperspherical angles: out[k] in [0, pi] for k < d-2, last in (-pi, pi]
    d = u.shape[0]
    for k in range(d - 2):
        tail = 0.0
        for j in range(k + 1, d):
            tail += u[j] * u[j]
        out[k] = math.atan2(math.sqrt(tail), u[k])
    out[d - 2] = math.atan2(u[d - 1], u[d - 2])


@njit(cache=True)
def _table_lookup(table, dims, u):
    m = dims.shape[0]
    ang = np.empty(m)
    _angles(u, ang)
    lo = np.empty(m, dtype=np.int64)
    hi = np.empty(m, dtype=np.int64)
    w = np.empty(m)
    for k in range(m):
        n = dims[k]
        if k < m - 1:
            pos = ang[k] / math.pi * (n - 1)
            i0 = int(math.floor(pos))
            if i0 >= n - 1:
                i0 = n - 2
            if i0 < 0:
                i0 = 0
            lo[k] = i0
            hi[k] = i0 + 1
            w[k] = pos - i0
        else:
            pos = (ang[k] + math.pi) / (2.0 * math.pi) * n
            i0 = int(math.floor(pos))
            frac = pos - i0
            i0 = i0 % n
            lo[k] = i0
            hi[k] = (i0 + 1) % n
            w[k] = frac
    total = 0.0
    for corner in range(1 << m):
        weight = 1.0
        idx = 0
        for k in range(m):
            if (corner >> k) & 1:
                weight *= w[k]
                ik = hi[k]
            else:
                weight *= 1.0 - w[k]
                ik = lo[k]
            idx = idx * dims[k] + ik
        if weight != 0.0:
            total += weight * table[idx]
    return total


@njit(cache=True)
def radial_extent(kind, params, table, dims, u):
    """Radius r(u) of the shape in unit direction ``u``."""
    if kind == BALL:
        return params[0]
    if kind == ELLIPSOID:
        s = 0.0
        for i in range(u.shape[0]):
            s += (u[i] / params[i]) ** 2
        return 1.0 / math.sqrt(s)
    return _table_lookup(table, dims, u)


@njit(cache=True)
def inside(kind, params, table, dims, x, scale):
    """Open membership ``|x| < scale * r(x/|x|)``; the origin is always inside."""
    r2 = 0.0
    for i in range(x.shape[0]):
        r2 += x[i] * x[i]
    if r2 == 0.0:
        return True
    if kind == BALL:
        R = scale * params[0]
        return r2 < R * R
    if kind == ELLIPSOID:
        q = 0.0
        for i in range(x.shape[0]):
            q += (x[i] / (scale * params[i])) ** 2
        return q < 1.0
    r = math.sqrt(r2)
    u = x / r
    return r < scale * _table_lookup(table, dims, u)


@njit(cache=True)
def radial_gap(kind, params, table, dims, x, scale):
    """``scale * r(x/|x|) - |x|``: positive inside, negative outside."""
    r = math.sqrt(np.sum(x * x))
    if r == 0.0:
        return scale * radial_extent(kind, params, table, dims, np.eye(x.shape[0])[0])
    return scale * radial_extent(kind, params, table, dims, x / r) - r


@njit(cache=True)
def fd_normal(kind, params, table, dims, x, h):
    """Inward normal from a central-difference gradient of the radial gap."""
    d = x.shape[0]
    g = np.empty(d)
    xp = x.copy()
    for i in range(d):
        xp[i] = x[i] + h
        gp = radial_gap(kind, params, table, dims, xp, 1.0)
        xp[i] = x[i] - h
        gm = radial_gap(kind, params, table, dims, xp, 1.0)
        xp[i] = x[i]
        g[i] = (gp - gm) / (2.0 * h)
    n = math.sqrt(np.sum(g * g))
    return g / n


@njit(cache=True)
def normal_at(kind, params, table, dims, x):
    """Inward unit normal of the unscaled shape near ``x`` (x != 0)."""
    d = x.shape[0]
    out = np.empty(d)
    if kind == BALL:
        r = math.sqrt(np.sum(x * x))
        for i in range(d):
            out[i] = -x[i] / r
        return out
    if kind == ELLIPSOID:
        for i in range(d):
            out[i] = -x[i] / (params[i] * params[i])
        n = math.sqrt(np.sum(out * out))
        return out / n
    return fd_normal(kind, params, table, dims, x, 1e-6 * (1.0 + math.sqrt(np.sum(x * x))))


@njit(cache=True)
def inside_batch(kind, params, table, dims, pts, scale):
    out = np.empty(pts.shape[0], dtype=np.bool_)
    x = np.empty(pts.shape[1])
    for i in range(pts.shape[0]):
        for j in range(pts.shape[1]):
            x[j] = pts[i, j]
        out[i] = inside(kind, params, table, dims, x, scale)
    return out


# ---------------------------------------------------------------------------
# shapes
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class StarDomain:
    """Bounded star-shaped domain described by its radial profile.

    ``inner`` and ``outer`` are radii with ``B_inner <= K <= B_outer``;
    ``lipschitz`` bounds the variation of the radial profile per radian.
    """

    variant: str
    d: int
    params: np.ndarray
    table: np.ndarray = field(default_factory=lambda: np.zeros(1))
    dims: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    inner: float = 0.0
    outer: float = 0.0
    lipschitz: float = 0.0

    @classmethod
    def ball(cls, radius: float = 1.0, d: int = 3) -> "StarDomain":
        if not radius > 0:
            raise ValueError("radius must be positive")
        return cls("ball", d, np.array([float(radius)]), inner=radius, outer=radius)

    @classmethod
    def ellipsoid(cls, semi_axes) -> "StarDomain":
        a = np.asarray(semi_axes, dtype=float)
        if a.ndim != 1 or a.size < 2 or np.any(a <= 0):
            raise ValueError("semi-axes must be positive")
        lo, hi = float(a.min()), float(a.max())
        lip = hi**3 * (1.0 / lo**2 - 1.0 / hi**2)
        return cls("ellipsoid", a.size, a, inner=lo, outer=hi, lipschitz=lip)

    @classmethod
    def radial_table(cls, table, d: int) -> "StarDomain":
        """Shape from radii on a tensor grid of hyperspherical angles.

        ``table`` has shape ``(n_1, ..., n_{d-1})``.  The first ``d-2`` angle
        axes span ``[0, pi]`` inclusive, the last spans ``[-pi, pi)``
        periodically.  Values are interpolated multilinearly.
        """
        t = np.asarray(table, dtype=float)
        if t.ndim != d - 1:
            raise ValueError(f"table for d={d} needs {d - 1} angle axes")
        if np.any(t <= 0):
            raise ValueError("radii must be positive")
        if any(n < 2 for n in t.shape[:-1]) or t.shape[-1] < 3:
            raise ValueError("angle grid too coarse")
        lip = 0.0
        for axis, n in enumerate(t.shape):
            span = 2 * math.pi / n if axis == d - 2 else math.pi / (n - 1)
            diff = np.abs(np.diff(t, axis=axis, append=np.take(t, [0], axis=axis)) if axis == d - 2 else np.diff(t, axis=axis))
            lip = max(lip, float(diff.max()) / span)
        return cls(
            "radial_table",
            d,
            np.zeros(1),
            table=np.ascontiguousarray(t.ravel()),
            dims=np.array(t.shape, dtype=np.int64),
            inner=float(t.min()),
            outer=float(t.max()),
            lipschitz=lip,
        )

    @classmethod
    def radial_from_function(cls, fn, d: int, n_polar: int = 33, n_azimuth: int = 64) -> "StarDomain":
        """Tabulate ``fn(unit_vector) -> radius`` on the angle grid."""
        axes = [np.linspace(0.0, math.pi, n_polar)] * (d - 2)
        axes.append(-math.pi + 2 * math.pi * np.arange(n_azimuth) / n_azimuth)
        grid = np.empty([len(a) for a in axes])
        for idx in itertools.product(*[range(len(a)) for a in axes]):
            ang = [axes[k][i] for k, i in enumerate(idx)]
            grid[idx] = fn(angles_to_unit(ang))
        return cls.radial_table(grid, d)

    @property
    def kind(self) -> int:
        return {"ball": BALL, "ellipsoid": ELLIPSOID, "radial_table": RADIAL_TABLE}[self.variant]

    def packed(self):
        return (self.kind, self.params, self.table, self.dims)

    def scaled(self, s: float) -> "StarDomain":
        """The shape ``s K``."""
        if s == 1.0:
            return self
        if self.variant == "radial_table":
            t = self.table.reshape(tuple(self.dims)) * s
            return StarDomain.radial_table(t, self.d)
        return StarDomain(
            self.variant, self.d, self.params * s, inner=self.inner * s,
            outer=self.outer * s, lipschitz=self.lipschitz * s,
        )

    def radius(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(radial_extent(self.kind, self.params, self.table, self.dims, u / np.linalg.norm(u)))

    def contains(self, x, scale: float = 1.0) -> bool:
        return bool(inside(self.kind, self.params, self.table, self.dims, np.asarray(x, dtype=float), float(scale)))

    def contains_many(self, pts, scale: float = 1.0) -> np.ndarray:
        pts = np.ascontiguousarray(pts, dtype=float)
        return inside_batch(self.kind, self.params, self.table, self.dims, pts, float(scale))

    def __repr__(self) -> str:
        if self.variant == "ball":
            return f"StarDomain.ball({self.params[0]}, d={self.d})"
        if self.variant == "ellipsoid":
            return f"StarDomain.ellipsoid({list(self.params)})"
        return f"StarDomain.radial_table(dims={list(self.dims)}, d={self.d})"


def angles_to_unit(angles) -> np.ndarray:
    """Inverse of the hyperspherical angle map used by radial tables."""
    m = len(angles)
    u = np.empty(m + 1)
    s = 1.0
    for k in range(m - 1):
        u[k] = s * math.cos(angles[k])
        s *= math.sin(angles[k])
    u[m - 1] = s * math.cos(angles[m - 1])
    u[m] = s * math.sin(angles[m - 1])
    return u


def load_radial_table(path, d: int) -> StarDomain:
    """Read ``theta_1,...,theta_{d-1},r`` rows on a full angle grid."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != d:
        raise ValueError(f"expected {d - 1} angle columns and one radius column")
    axes = [np.unique(data[:, k]) for k in range(d - 1)]
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != data.shape[0]:
        raise ValueError("radial table rows do not form a full tensor grid")
    grid = np.empty(shape)
    idx = tuple(np.searchsorted(axes[k], data[:, k]) for k in range(d - 1))
    grid[idx] = data[:, -1]
    for k, a in enumerate(axes):
        n = len(a)
        want = (-math.pi + 2 * math.pi * np.arange(n) / n) if k == d - 2 else np.linspace(0, math.pi, n)
        if not np.allclose(a, want, atol=1e-9):
            raise ValueError(f"angle column {k + 1} is not on the expected uniform grid")
    return StarDomain.radial_table(grid, d)


# ---------------------------------------------------------------------------
# growing domains
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class GrowingDomain:
    """``D_t = f(t) K`` in the continuum or intersected with the lattice.

    With ``enforce_b2`` the shape is enlarged, if needed, so that
    ``inner * f(0) >= 2`` and hence ``B_2`` lies inside ``D_0``.
    """

    shape: StarDomain
    scale: ScaleFunction
    mode: str = "lattice"
    enforce_b2: bool = False

    def __post_init__(self):
        if self.mode not in ("lattice", "continuum"):
            raise ValueError("mode must be 'lattice' or 'continuum'")
        if self.enforce_b2:
            base = self.shape.inner * evaluate(self.scale, 0.0)
            if base < 2.0:
                object.__setattr__(self, "shape", self.shape.scaled(2.0 / base))

    @property
    def d(self) -> int:
        return self.shape.d

    def f(self, t: float) -> float:
        return evaluate(self.scale, t)


def contains(dom: GrowingDomain, t: float, x) -> bool:
    if t < 0:
        raise ValueError("time must be non-negative")
    x = np.asarray(x, dtype=float)
    if dom.mode == "lattice" and not np.all(x == np.round(x)):
        raise ValueError("lattice domains only contain integer points")
    return dom.shape.contains(x, dom.f(t))


def lattice_neighbors(dom: GrowingDomain, t: float, y) -> list[tuple[int, ...]]:
    """In-domain nearest neighbours of ``y`` at time ``t`` in canonical order."""
    if dom.mode != "lattice":
        raise ValueError("neighbours are only defined for lattice domains")
    y = np.asarray(y, dtype=np.int64)
    if not contains(dom, t, y):
        raise ValueError(f"{tuple(y)} is not in the domain at time {t}")
    cand = y[None, :] + unit_vectors(dom.d)
    ok = dom.shape.contains_many(cand, dom.f(t))
    out = [tuple(int(v) for v in c) for c, keep in zip(cand, ok) if keep]
    if not out:
        raise IsolatedVertex(f"{tuple(y)} has no neighbour in the domain at time {t}")
    return out


def _box(radius: float, d: int) -> np.ndarray:
    R = int(math.ceil(radius))
    ax = np.arange(-R, R + 1)
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def lattice_sites(dom: GrowingDomain, t: float) -> np.ndarray:
    """All lattice points of ``D_t`` as an ``(n, d)`` integer array."""
    if dom.mode != "lattice":
        raise ValueError("lattice sites need a lattice domain")
    s = dom.f(t)
    pts = _box(s * dom.shape.outer, dom.d)
    return pts[dom.shape.contains_many(pts, s)]


def inner_boundary(dom: GrowingDomain, t: float) -> set[tuple[int, ...]]:
    sites = lattice_sites(dom, t)
    s = dom.f(t)
    out = set()
    for e in unit_vectors(dom.d):
        nb_in = dom.shape.contains_many(sites + e, s)
        for p in sites[~nb_in]:
            out.add(tuple(int(v) for v in p))
    return out


def inward_normal(shape: StarDomain, x, method: str = "analytic") -> np.ndarray:
    """Inward unit normal of ``shape`` at ``x`` (a point near its boundary)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0:
        raise ValueError("the normal is undefined at the origin")
    if method == "fd":
        return fd_normal(shape.kind, shape.params, shape.table, shape.dims, x, 1e-6 * (1 + r))
    return normal_at(shape.kind, shape.params, shape.table, shape.dims, x)


def is_connected(sites, origin=None) -> bool:
    """Nearest-neighbour connectivity of a finite lattice set containing ``origin``."""
    sites = np.asarray(sites, dtype=np.int64)
    if sites.ndim != 2 or sites.shape[0] == 0:
        raise ValueError("empty site set")
    d = sites.shape[1]
    origin = np.zeros(d, dtype=np.int64) if origin is None else np.asarray(origin, dtype=np.int64)
    lo = sites.min(axis=0)
    mask = np.zeros(tuple(sites.max(axis=0) - lo + 1), dtype=bool)
    mask[tuple((sites - lo).T)] = True
    o = tuple(origin - lo)
    if any(c < 0 or c >= n for c, n in zip(o, mask.shape)) or not mask[o]:
        raise ValueError("origin is not in the set")
    labels, _ = ndimage.label(mask, structure=ndimage.generate_binary_structure(d, 1))
    return bool(np.all(labels[mask] == labels[o]))


def connectivity_check(dom: GrowingDomain, t: float) -> bool:
    return is_connected(lattice_sites(dom, t))


# ---------------------------------------------------------------------------
# frozen lattice domains as index graphs
# ---------------------------------------------------------------------------
@dataclass(eq=False)
class FrozenLattice:
    """The walk graph on ``a K  (intersected with Z^d)`` with canonical neighbour order.

    ``nbr[i, :deg[i]]`` lists the in-domain neighbours of site ``i`` in the
    order ``+e1, -e1, ..., +ed, -ed``.
    """

    shape: StarDomain
    a: float
    sites: np.ndarray
    nbr: np.ndarray
    deg: np.ndarray
    _lookup: np.ndarray
    _offset: int

    @classmethod
    def build(cls, shape: StarDomain, a: float, enforce_b2: bool = True) -> "FrozenLattice":
        """Frozen domain ``a K``.  With ``enforce_b2`` the shape is first
        rescaled so that ``K`` contains ``B_2`` (a reparametrisation of the
        profile that keeps B_2 inside every lattice domain)."""
        if enforce_b2 and shape.inner < 2.0:
            shape = shape.scaled(2.0 / shape.inner)
        d = shape.d
        R = int(math.ceil(a * shape.outer)) + 1
        pts = _box(R - 1, d)
        pts = pts[shape.contains_many(pts, a)]
        side = 2 * R + 1
        lookup = -np.ones(side**d, dtype=np.int64)
        strides = side ** np.arange(d - 1, -1, -1)
        flat = (pts + R) @ strides
        lookup[flat] = np.arange(len(pts))
        nbr = -np.ones((len(pts), 2 * d), dtype=np.int64)
        deg = np.zeros(len(pts), dtype=np.int64)
        for e in unit_vectors(d):
            j = lookup[(pts + e + R) @ strides]
            ok = j >= 0
            nbr[ok, deg[ok]] = j[ok]
            deg[ok] += 1
        if np.any(deg == 0) and len(pts) > 1:
            raise IsolatedVertex("frozen domain has an isolated site")
        return cls(shape, float(a), pts, nbr, deg, lookup, R)

    @property
    def d(self) -> int:
        return self.sites.shape[1]

    def __len__(self) -> int:
        return len(self.sites)

    def index(self, point) -> int:
        p = np.asarray(point, dtype=np.int64)
        side = 2 * self._offset + 1
        if np.any(np.abs(p) > self._offset):
            raise KeyError(tuple(p))
        flat = int((p + self._offset) @ (side ** np.arange(self.d - 1, -1, -1)))
        i = int(self._lookup[flat])
        if i < 0:
            raise KeyError(tuple(p))
        return i

    def __contains__(self, point) -> bool:
        try:
            self.index(point)
        except KeyError:
            return False
        return True

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt((self.sites.astype(float) ** 2).sum(axis=1))

    def mask_outside_ball(self, r: float) -> np.ndarray:
        """Sites of the complement of the open ball ``B_r``."""
        return self.radii >= r

    def mask_in_closed_ball(self, r: float) -> np.ndarray:
        return self.radii <= r
