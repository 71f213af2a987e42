"""Distribution of IDLA shape ratios at a fixed cluster size over many seeds."""

import argparse

import numpy as np

from growing_walks.idla import Intensity, grow, shape_deviation
from growing_walks.stats import wilson


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--size", type=int, default=10_000)
    ap.add_argument("--first-seed", type=int, default=10**6)
    args = ap.parse_args()
    inner, outer = [], []
    for s in range(args.seeds):
        sd = shape_deviation(grow(Intensity.const(1.0), 1.0, 1e12, args.first_seed + s, max_settled=args.size))
        inner.append(sd["inner_ratio"])
        outer.append(sd["outer_ratio"])
    inner, outer = np.array(inner), np.array(outer)
    bad = int(np.sum((inner < 0.85) | (outer > 1.15)))
    e = wilson(bad, args.seeds)
    print(f"inner quantiles {np.quantile(inner, [0.05, 0.5, 0.95])}")
    print(f"outer quantiles {np.quantile(outer, [0.05, 0.5, 0.95])}")
    print(f"seeds outside bounds: {bad}/{args.seeds} ({e.value:.3f}, CI [{e.lo:.3f}, {e.hi:.3f}])")


if __name__ == "__main__":
    main()
