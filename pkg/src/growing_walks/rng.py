"""Counter-based random streams.

Every random draw in the package is a pure function of
``(master_seed, replica, sub, counter)``.  The generator is SplitMix64 used
in its counter form: the ``n``-th output of a stream with key ``k`` is
``mix(k + (n + 1) * GOLDEN)``.  Replicas can therefore be evaluated in any
order, on any number of workers, and produce bit-identical results.
"""

from __future__ import annotations

import math

import numpy as np
from numba import int64, njit, uint64

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0x5851F42D4C957F2D)
_SUB_SALT = np.uint64(0xD1B54A32D192ED03)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

__all__ = [
    "mix64",
    "stream_key",
    "draw_u64",
    "draw_uniform",
    "draw_normals",
    "CounterStream",
]


@njit(cache=True, inline="always")
def mix64(z):
    z = uint64(z)
    z = (z ^ (z >> uint64(30))) * _M1
    z = (z ^ (z >> uint64(27))) * _M2
    return z ^ (z >> uint64(31))


@njit(cache=True)
def stream_key(master_seed, replica, sub=0):
    """Key of the stream belonging to ``(master_seed, replica, sub)``."""
    k = mix64(uint64(master_seed) ^ _SEED_SALT)
    k = mix64(k + uint64(replica) * GOLDEN)
    return mix64(k ^ (uint64(sub) * _SUB_SALT))


@njit(cache=True, inline="always")
def draw_u64(key, counter):
    return mix64(uint64(key) + (uint64(counter) + uint64(1)) * GOLDEN)


@njit(cache=True, inline="always")
def draw_uniform(key, counter):
    """Uniform double in [0, 1) with 53 random bits."""
    return float(draw_u64(key, counter) >> uint64(11)) * _INV53


@njit(cache=True)
def draw_normals(key, base, out):
    """Fill ``out`` with standard normals (Box-Muller).

    Consumes counters ``base .. base + 2*ceil(len(out)/2) - 1``.
    """
    n = out.shape[0]
    j = 0
    c = int64(base)
    while j < n:
        u1 = draw_uniform(key, c)
        u2 = draw_uniform(key, c + 1)
        c += 2
        rad = math.sqrt(-2.0 * math.log(1.0 - u1))
        ang = 2.0 * math.pi * u2
        out[j] = rad * math.cos(ang)
        if j + 1 < n:
            out[j + 1] = rad * math.sin(ang)
        j += 2


def normal_block(d: int) -> int:
    """Counters consumed per ``d``-dimensional Gaussian increment."""
    return 2 * ((d + 1) // 2)


class CounterStream:
    """Python-side view of a single keyed stream."""

    def __init__(self, master_seed: int, replica: int = 0, sub: int = 0):
        self.master_seed = int(master_seed)
        self.replica = int(replica)
        self.sub = int(sub)
        self.key = int(stream_key(np.uint64(master_seed), np.uint64(replica), np.uint64(sub)))

    def u64(self, counter: int) -> int:
        return int(draw_u64(np.uint64(self.key), np.uint64(counter)))

    def uniform(self, counter: int) -> float:
        return float(draw_uniform(np.uint64(self.key), np.uint64(counter)))

    def normals(self, counter: int, d: int) -> np.ndarray:
        out = np.empty(d)
        draw_normals(np.uint64(self.key), np.uint64(counter), out)
        return out

    def __repr__(self) -> str:
        return f"CounterStream(seed={self.master_seed}, replica={self.replica}, sub={self.sub})"
