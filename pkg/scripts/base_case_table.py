"""Outer/inner iteration counts and timing for every configuration on one case.

    python scripts/base_case_table.py --case case118 --out results/base_case.csv
"""
import argparse
from pathlib import Path

from newtonflow import harness
from newtonflow.solvers import Method


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="case118")
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    case = harness.resolve_case(args.case)
    result = harness.compare(case, [m.value for m in Method], alpha=args.alpha)
    print(f"{case.name}: {len(case.buses)} buses, alpha = {args.alpha:g}")
    print(result.table())
    # fixed-step BEM-J as the reference for the step-control comparison
    fixed = harness.run_single(case, "BEM-J", {"fixed_step": True}, args.alpha)
    print(f"BEM-J at fixed h = 1: {fixed.verdict.value}, {fixed.outer_iterations} outer, "
          f"{fixed.inner_iterations} inner")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        result.write_csv(args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
