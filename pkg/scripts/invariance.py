"""KS distance between rescaled walk exit times and reflected Brownian exit times."""

import argparse

from growing_walks import harness as H
from growing_walks.geometry import StarDomain


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--replicas", type=int, default=10_000)
    ap.add_argument("--dt", type=float, default=1e-5)
    ap.add_argument("--a", type=float, nargs="+", default=[10, 20, 40])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/invariance")
    args = ap.parse_args()
    res = H.invariance_check(StarDomain.ball(1.0, 3), args.a, args.replicas, args.seed, rbm_dt=args.dt,
                             workers=args.workers)
    H.write_csv(f"{args.out}/invariance.csv", ["a", "ks", "p"], list(zip(res.a_list, res.ks, res.pvalues)))
    H.write_plot(f"{args.out}/invariance.plot.csv", res.a_list, res.ks)
    for a, k, p in zip(res.a_list, res.ks, res.pvalues):
        print(f"a={a:g} KS={k:.4f} p={p:.3g}")


if __name__ == "__main__":
    main()
