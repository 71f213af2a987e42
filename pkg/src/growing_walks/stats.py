"""Confidence intervals, tail fits and small test helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = ["Estimate", "wilson", "median_ci", "TailFit", "tail_fit", "ks_distance"]

Z95 = 1.959963984540054


@dataclass(frozen=True)
class Estimate:
    """Binomial proportion with a two-sided Wilson interval."""

    value: float
    lo: float
    hi: float
    successes: int
    trials: int

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)


def wilson(successes: int, trials: int, z: float = Z95) -> Estimate:
    if trials <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return Estimate(p, lo, hi, int(successes), int(trials))


def median_ci(samples, conf: float = 0.95) -> tuple[float, float, float]:
    """Sample median with a distribution-free order-statistic interval."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    alpha = 1.0 - conf
    lo_rank = int(stats.binom.ppf(alpha / 2, n, 0.5))
    hi_rank = int(stats.binom.isf(alpha / 2, n, 0.5))
    lo_rank = min(max(lo_rank, 1), n)
    hi_rank = min(max(hi_rank + 1, 1), n)
    return float(np.median(x)), float(x[lo_rank - 1]), float(x[hi_rank - 1])


@dataclass(frozen=True)
class TailFit:
    slope: float
    intercept: float
    r2: float
    cells: int

    @property
    def exponential(self) -> bool:
        return self.slope < 0 and self.r2 >= 0.9


def tail_fit(samples, t_grid, min_samples: int = 1000) -> TailFit:
    """Least-squares fit of ``log P(X > t)`` against ``t`` on ``t_grid``.

    Grid cells with an empty tail are skipped.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {x.size}")
    t = np.asarray(t_grid, dtype=float)
    surv = np.array([(x > s).mean() for s in t])
    keep = surv > 0
    if keep.sum() < 3:
        raise ValueError("fewer than 3 non-empty tail cells")
    res = stats.linregress(t[keep], np.log(surv[keep]))
    return TailFit(float(res.slope), float(res.intercept), float(res.rvalue**2), int(keep.sum()))


def ks_distance(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and p-value."""
    r = stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return float(r.statistic), float(r.pvalue)
