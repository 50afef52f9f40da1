"""Region CSVs for FEM, BEM and the distorted FEM pencil, plus their stability bounds.

    python scripts/convergence_regions.py --out-dir results/regions
"""
import argparse
from pathlib import Path

from newtonflow.analysis import PencilSpec, Scheme, parse_grid, region_scan, stability_bound, write_region

SPECS = {
    "fem": PencilSpec(Scheme.FEM),
    "bem": PencilSpec(Scheme.BEM),
    "fem_distorted": PencilSpec(Scheme.FEM, eta=2.33, eps_res=-0.7),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", default="0.01:0.01:4")
    ap.add_argument("--out-dir", type=Path, default=Path("results/regions"))
    args = ap.parse_args()

    grid = parse_grid(args.grid)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, spec in SPECS.items():
        bound = stability_bound(spec)
        text = "empty" if bound is None else f"({bound[0]:.4f}, {bound[1]:.4f})"
        path = args.out_dir / f"region_{name}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            write_region(region_scan(spec, grid), fh)
        print(f"{name:<14} stable for h in {text:<20} -> {path}")


if __name__ == "__main__":
    main()
