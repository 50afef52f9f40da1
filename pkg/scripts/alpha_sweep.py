"""Convergence percentage per method when the initial angles are scaled by alpha.

The default reproduces the acceptance setting (118-bus, 100 samples in (1, 2]).
Wider ranges, e.g. ``--alpha-hi 6``, are where the methods actually separate.

    python scripts/alpha_sweep.py --samples 500 --jobs 8 --out-dir results/sweep
"""
import argparse

from newtonflow import harness
from newtonflow.solvers import Method


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="case118")
    ap.add_argument("--alpha-lo", type=float, default=1.0)
    ap.add_argument("--alpha-hi", type=float, default=2.0)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--grid", action="store_true")
    ap.add_argument("--jobs", type=int, default=harness.default_jobs())
    ap.add_argument("--method", action="append", help="repeatable; default all seven")
    ap.add_argument("--out-dir")
    args = ap.parse_args()

    cfg = harness.SweepConfig(
        case=args.case,
        methods=tuple(args.method or [m.value for m in Method]),
        alpha_lo=args.alpha_lo,
        alpha_hi=args.alpha_hi,
        samples=args.samples,
        seed=args.seed,
        grid=args.grid,
        jobs=args.jobs,
        out_dir=args.out_dir,
    )
    result = harness.run_sweep(cfg)
    print(f"{cfg.case}, alpha in ({cfg.alpha_lo:g}, {cfg.alpha_hi:g}], {len(result.alphas)} samples, seed {cfg.seed}")
    print(result.table())
    if args.out_dir:
        print(f"CSV files in {args.out_dir}")


if __name__ == "__main__":
    main()
