"""Command-line entry point: ``growing-walks <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness as H

KIND = {
    "simulate-srw": "srw",
    "simulate-rbm": "rbm",
    "idla": "idla",
    "hit-prob": "hit_prob",
    "couple": "couple",
    "sweep": "sweep",
}


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", type=Path, required=config_required, help="key = value experiment file")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--replicas", type=int, default=None, help="replica count (overrides the config)")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="growing-walks", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in KIND:
        _common(sub.add_parser(name))
    chk = sub.add_parser("check", help="run the acceptance suite")
    _common(chk, config_required=False)
    chk.add_argument("--quick", action="store_true", help="reduced sample sizes (not the acceptance sizes)")
    chk.add_argument("--criteria", type=int, nargs="*", default=None, help="subset of criterion numbers")
    chk.add_argument("--diagnostics", action="store_true", help="also print comparison diagnostics")
    return ap


def _load(args, kind: str) -> H.ExperimentConfig:
    cfg = H.load_config(args.config, master_seed=args.seed, replicas=args.replicas,
                        out=None if args.out is None else str(args.out))
    if cfg.kind != kind and not (kind == "sweep" and cfg.kind in ("srw", "sweep")):
        raise H.ConfigError(f"config kind {cfg.kind!r} does not match subcommand (expected {kind!r})")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        from .acceptance import run_check

        out = args.out or Path("check_out")
        seed = 1 if args.seed is None else args.seed
        res = run_check(out, seed, workers=args.workers, quick=args.quick, criteria=args.criteria,
                        diagnostics=args.diagnostics, echo=print)
        return 0 if all(r.passed for r in res) else 1
    try:
        cfg = _load(args, KIND[args.command])
    except (H.ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    if args.command == "simulate-srw":
        pv = H.run_srw(cfg, out, args.workers)
        print(f"J {pv.j_verdict}, trend {pv.empirical_trend}, consistent {pv.consistent}")
    elif args.command == "simulate-rbm":
        pv = H.run_rbm(cfg, out, args.workers)
        print(f"J {pv.j_verdict}, trend {pv.empirical_trend}, consistent {pv.consistent}")
    elif args.command == "sweep":
        for a, pv in zip(cfg.alphas, H.run_sweep(cfg, out, args.workers)):
            print(f"alpha {a}: J {pv.j_verdict}, trend {pv.empirical_trend}, consistent {pv.consistent}")
    elif args.command == "idla":
        print(H.run_idla(cfg, out))
    elif args.command == "couple":
        print(H.run_couple(cfg, out, args.workers))
    elif args.command == "hit-prob":
        rows, eps = H.run_hit_prob(cfg, out)
        print("r,oracle,closed_form,abs_diff")
        for r in rows:
            print(",".join(H._fmt(v, 10) for v in r))
        print(f"# closed form uses inner radius {eps:.6f}, matched at r = a/2", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
