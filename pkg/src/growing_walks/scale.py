"""Growth profiles f(t), the divergence functional J_f and the profile classes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numba import njit

__all__ = [
    "ScaleFunction",
    "Verdict",
    "Method",
    "DivergenceVerdict",
    "FStarReport",
    "evaluate",
    "j_functional",
    "f_star_membership",
    "dyadic_envelope",
    "load_table",
]

# kind codes shared with the numba kernels
STEPS = 0
POWER = 1


class Verdict(str, Enum):
    FINITE = "Finite"
    DIVERGENT = "Divergent"
    UNDETERMINED = "Undetermined"


class Method(str, Enum):
    CLOSED_FORM = "ClosedForm"
    PARTIAL_SUM = "PartialSum"


@dataclass(frozen=True, eq=False)
class ScaleFunction:
    """A non-decreasing, strictly positive growth profile.

    Three variants are supported: ``piecewise`` (levels ``a_l`` entered at
    jump times ``t_l`` with ``t_1 = 0``), ``power`` (``(c + t)**alpha``) and
    ``tabulated`` (sorted ``(t, value)`` samples).  Step variants are
    right-continuous and hold their last level forever.

    ``unbounded`` marks a step profile whose stored levels are a prefix of an
    unbounded sequence.  When it is false the profile really is bounded, which
    the divergence functional classifies as ``J_f = inf``.
    """

    variant: str
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    c: float = 1.0
    alpha: float = 0.0
    unbounded: bool = True

    # -- constructors -----------------------------------------------------
    @classmethod
    def piecewise(cls, levels, times, unbounded: bool = True) -> "ScaleFunction":
        a = np.asarray(levels, dtype=float)
        t = np.asarray(times, dtype=float)
        if a.ndim != 1 or a.shape != t.shape or a.size == 0:
            raise ValueError("levels and times must be equal-length, non-empty 1-d sequences")
        if t[0] != 0.0:
            raise ValueError("the first jump time must be 0")
        if np.any(a <= 0):
            raise ValueError("levels must be strictly positive")
        if np.any(np.diff(a) <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("levels and jump times must be strictly increasing")
        a.setflags(write=False)
        t.setflags(write=False)
        return cls("piecewise", t, a, unbounded=unbounded)

    @classmethod
    def power(cls, c: float, alpha: float) -> "ScaleFunction":
        if not c > 0:
            raise ValueError("power profile needs c > 0")
        if alpha < 0:
            raise ValueError("power profile needs alpha >= 0")
        return cls("power", c=float(c), alpha=float(alpha), unbounded=alpha > 0)

    @classmethod
    def constant(cls, value: float) -> "ScaleFunction":
        return cls.piecewise([value], [0.0], unbounded=False)

    @classmethod
    def tabulated(cls, samples) -> "ScaleFunction":
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise ValueError("tabulated profile needs (t, value) rows")
        t, v = arr[:, 0].copy(), arr[:, 1].copy()
        if t[0] != 0.0:
            raise ValueError("tabulated profile must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if np.any(v <= 0) or np.any(np.diff(v) < 0):
            raise ValueError("tabulated values must be positive and non-decreasing")
        t.setflags(write=False)
        v.setflags(write=False)
        return cls("tabulated", t, v, unbounded=False)

    # -- queries ------------------------------------------------------------
    @property
    def kind(self) -> int:
        return POWER if self.variant == "power" else STEPS

    @property
    def levels(self) -> np.ndarray:
        return self.values

    def packed(self):
        """Arguments in the order expected by the jitted evaluators."""
        if self.variant == "power":
            return (POWER, self.c, self.alpha, np.zeros(1), np.ones(1))
        return (STEPS, 0.0, 0.0, np.ascontiguousarray(self.times), np.ascontiguousarray(self.values))

    def __call__(self, t):
        return evaluate(self, t)

    def derivative(self, t: float) -> float:
        """Derivative of the continuous part (zero for step profiles)."""
        if self.variant == "power":
            return self.alpha * (self.c + t) ** (self.alpha - 1.0)
        return 0.0

    def jump_times(self) -> np.ndarray:
        if self.variant == "power":
            return np.zeros(0)
        return np.asarray(self.times[1:][np.diff(self.values) > 0])

    def is_bounded(self) -> bool:
        if self.variant == "power":
            return self.alpha == 0
        return not self.unbounded

    def __repr__(self) -> str:
        if self.variant == "power":
            return f"ScaleFunction.power(c={self.c}, alpha={self.alpha})"
        return f"ScaleFunction.{self.variant}(levels={list(self.values)}, times={list(self.times)})"


@njit(cache=True)
def scale_at(kind, c, alpha, times, values, t):
    if kind == POWER:
        return (c + t) ** alpha
    idx = np.searchsorted(times, t, side="right") - 1
    if idx < 0:
        idx = 0
    return values[idx]


@njit(cache=True)
def scale_derivative(kind, c, alpha, t):
    if kind == POWER:
        return alpha * (c + t) ** (alpha - 1.0)
    return 0.0


def evaluate(f: ScaleFunction, t):
    """f(t) for scalar or array ``t >= 0``."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("time must be non-negative")
    if f.variant == "power":
        out = (f.c + arr) ** f.alpha
    else:
        idx = np.searchsorted(f.times, arr, side="right") - 1
        out = f.values[np.maximum(idx, 0)]
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# J_f
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DivergenceVerdict:
    partial_value: float
    verdict: Verdict
    method: Method
    value: float | None = None  # full J_f when a closed form exists

    @property
    def finite(self) -> bool:
        return self.verdict is Verdict.FINITE


def _step_partial(times, values, d: int, horizon: float) -> float:
    total = 0.0
    for i, t0 in enumerate(times):
        if t0 >= horizon:
            break
        t1 = times[i + 1] if i + 1 < len(times) else math.inf
        total += values[i] ** (-d) * (min(t1, horizon) - t0)
    return total


def j_functional(f: ScaleFunction, d: int, horizon: float = math.inf) -> DivergenceVerdict:
    """Evaluate ``J_f = int_0^inf f(t)^-d dt`` as far as it can be decided.

    Power profiles are decided in closed form (finite iff ``alpha*d > 1``).
    Step profiles report the exact truncated sum up to ``horizon``; a profile
    that is bounded (no unbounded intent) is classified divergent, otherwise
    the verdict is left undetermined.
    """
    if d < 3:
        raise ValueError("dimension must be at least 3")
    if not horizon > 0:
        raise ValueError("horizon must be positive")

    if f.variant == "power":
        p = f.alpha * d
        if p > 1:
            value = f.c ** (1 - p) / (p - 1)
            if math.isinf(horizon):
                partial = value
            else:
                partial = (f.c ** (1 - p) - (f.c + horizon) ** (1 - p)) / (p - 1)
            return DivergenceVerdict(partial, Verdict.FINITE, Method.CLOSED_FORM, value)
        if math.isinf(horizon):
            partial = math.inf
        elif p == 1:
            partial = math.log((f.c + horizon) / f.c)
        else:
            partial = ((f.c + horizon) ** (1 - p) - f.c ** (1 - p)) / (1 - p)
        return DivergenceVerdict(partial, Verdict.DIVERGENT, Method.CLOSED_FORM, math.inf)

    partial = _step_partial(f.times, f.values, d, horizon)
    if f.variant == "piecewise" and not f.unbounded:
        # bounded profile: the last level is held forever
        return DivergenceVerdict(partial, Verdict.DIVERGENT, Method.PARTIAL_SUM, math.inf)
    return DivergenceVerdict(partial, Verdict.UNDETERMINED, Method.PARTIAL_SUM)


# ---------------------------------------------------------------------------
# class F_*
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FStarReport:
    increments_increasing: bool
    tail_sum_partial: float
    verdict: str  # "Member" | "NotMember" | "Undetermined"
    certificate: str = ""


def _power_envelope_exponent(a: np.ndarray) -> float:
    """Largest p with a_l >= a_1 * l**p over the stored levels (l >= 2)."""
    if a.size < 2:
        return 0.0
    l = np.arange(2, a.size + 1, dtype=float)
    return float(np.min(np.log(a[1:] / a[0]) / np.log(l)))


def f_star_membership(f: ScaleFunction, d: int, check_depth: int | None = None) -> FStarReport:
    """Check the separation-of-scales class on the first ``check_depth`` levels.

    Membership needs strictly increasing increments ``a_l - a_{l-1}`` and a
    summable ``sum_l a_l^(2-d) log(1 + a_l)``.  A finite prefix cannot prove
    the second condition, so ``Member`` is only returned with a certificate:
    ``d >= 4`` (super-linear levels make the series converge) or, for ``d = 3``,
    a power lower envelope ``a_l >= a_1 l^p`` with ``p > 1`` on the prefix.
    """
    if f.variant != "piecewise":
        raise ValueError("class membership is defined for piecewise-constant profiles")
    if d < 3:
        raise ValueError("dimension must be at least 3")
    a = np.asarray(f.values, dtype=float)
    depth = a.size if check_depth is None else int(check_depth)
    if depth > a.size or depth < 1:
        raise ValueError("check_depth exceeds the stored levels")
    a = a[:depth]
    tail = float(np.sum(a ** (2.0 - d) * np.log1p(a)))
    inc = np.diff(a)
    increasing = bool(np.all(np.diff(inc) > 0))
    if not increasing:
        return FStarReport(False, tail, "NotMember")
    if depth < 3:
        return FStarReport(True, tail, "Undetermined")
    if d >= 4:
        return FStarReport(True, tail, "Member", "d>=4 with super-linear levels")
    p = _power_envelope_exponent(a)
    if p > 1:
        return FStarReport(True, tail, "Member", f"power envelope exponent {p:.4g} > 1")
    return FStarReport(True, tail, "Undetermined")


# ---------------------------------------------------------------------------
# dyadic envelope
# ---------------------------------------------------------------------------
def _first_time_at_least(f: ScaleFunction, level: float, lo: float, t_max: float, rel: float):
    """inf{t >= lo : f(t) >= level}, or None when not reached by t_max."""
    if f.variant != "power":
        hit = np.nonzero(f.values >= level)[0]
        if hit.size == 0:
            return None
        t = float(f.times[hit[0]])
        return max(t, lo) if t <= t_max else None
    if evaluate(f, lo) >= level:
        return lo
    hi = max(1.0, 2.0 * lo)
    while evaluate(f, hi) < level:
        if hi >= t_max:
            return None
        hi = min(2.0 * hi, t_max)
    while hi - lo > rel * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        if evaluate(f, mid) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def dyadic_envelope(
    f: ScaleFunction,
    resolution: float = 1e-9,
    t_max: float = 1e12,
    max_levels: int = 256,
) -> ScaleFunction:
    """Piecewise-constant ``g`` with ``g <= f <= 2g``.

    Levels are ``2**(l-1) * f(0)``, entered at the first time ``f`` reaches
    them.  Jump times of step profiles are exact; continuous profiles are
    bisected to relative ``resolution`` and always rounded up, so ``g <= f``
    holds exactly.  A power profile that stops short of the next level by
    ``t_max`` yields a truncated result, marked ``unbounded=False``; step
    profiles keep their own flag.
    """
    f0 = evaluate(f, 0.0)
    levels, times = [f0], [0.0]
    truncated = False
    for l in range(2, max_levels + 1):
        level = 2.0 ** (l - 1) * f0
        t = _first_time_at_least(f, level, times[-1], t_max, resolution)
        if t is None:
            truncated = True
            break
        if t == times[-1]:
            # f jumped over several dyadic levels at once: keep the top one
            levels[-1] = level
            continue
        levels.append(level)
        times.append(t)
    unbounded = f.unbounded if f.variant != "power" else not truncated
    return ScaleFunction.piecewise(levels, times, unbounded=unbounded)


def load_table(path) -> ScaleFunction:
    """Read a ``t,value`` CSV into a tabulated profile."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ScaleFunction.tabulated(data)
