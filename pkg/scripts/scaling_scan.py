"""Hit-origin probability across a at several fixed values of T / a^d."""

import argparse

from growing_walks.geometry import StarDomain
from growing_walks.srw import hit_origin_probability


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--replicas", type=int, default=10_000)
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.25, 1.0, 4.0])
    ap.add_argument("--a", type=int, nargs="+", default=[8, 16, 32])
    args = ap.parse_args()
    ball = StarDomain.ball(1.0, 3)
    print("ratio,a,estimate,lo,hi")
    for ratio in args.ratios:
        for a in args.a:
            e = hit_origin_probability(ball, a, (a // 2, 0, 0), int(ratio * a**3), args.replicas, args.seed + a)
            print(f"{ratio},{a},{e.value:.5f},{e.lo:.5f},{e.hi:.5f}")


if __name__ == "__main__":
    main()
