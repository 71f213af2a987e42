"""Phase experiments for the two growth exponents on both sides of J = inf."""

import argparse

from growing_walks import harness as H


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--replicas", type=int, default=20)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/phase")
    args = ap.parse_args()
    for label, scale in (("alpha0.25", ("power", (16.0, 0.25))), ("alpha0.5", ("power", (1.0, 0.5)))):
        cfg = H.ExperimentConfig(kind="srw", scale=scale, horizons=(10**5, 10**6, 10**7), replicas=args.replicas,
                                 master_seed=args.seed)
        pv = H.run_srw(cfg, f"{args.out}/{label}", args.workers)
        print(label, pv.j_verdict, pv.empirical_trend, pv.consistent, pv.medians)


if __name__ == "__main__":
    main()
