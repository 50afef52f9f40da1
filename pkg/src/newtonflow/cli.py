"""Command line: ``newtonflow {solve,compare,sweep,region}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, harness
from .casefile import CaseFormatError, CaseValidationError
from .solvers import Method

METHOD_NAMES = [m.value.lower() for m in Method]


def _method(text: str) -> str:
    key = text.strip().lower()
    if key not in METHOD_NAMES:
        raise argparse.ArgumentTypeError(f"unknown method {text!r}; choose from {', '.join(METHOD_NAMES)}")
    return key


def _solver_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("solver settings")
    g.add_argument("--h0", type=float, help="initial step size (default 1)")
    g.add_argument("--dq", type=float, help="QSS quantum (default 20)")
    g.add_argument("--hmax", type=float, help="maximum step (default 8000)")
    g.add_argument("--tol", type=float, help="outer state-change and residual tolerance (default 1e-8)")
    g.add_argument("--inner-max", type=int, help="BEM-J inner iteration limit (default 20)")
    g.add_argument("--max-outer", type=int, help="outer iteration limit (default 200)")
    g.add_argument("--fixed-step", action="store_true", help="BEM-J: keep h = h0")
    g.add_argument("--estimate-cond", action="store_true", help="record a 1-norm condition estimate per iteration")


def _overrides(args) -> dict:
    out = {}
    for flag, name in (("h0", "h0"), ("dq", "dq"), ("hmax", "h_max"), ("inner_max", "max_inner"),
                       ("max_outer", "max_outer")):
        v = getattr(args, flag, None)
        if v is not None:
            out[name] = v
    if getattr(args, "tol", None) is not None:
        out["outer_tol"] = out["residual_tol"] = args.tol
    if getattr(args, "fixed_step", False):
        out["fixed_step"] = True
    if getattr(args, "estimate_cond", False):
        out["estimate_condition"] = True
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newtonflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    case_help = "MATPOWER .m file or bundled case name (case9, case14, case30, case118)"
    methods_help = f"one of: {', '.join(METHOD_NAMES)}"

    p = sub.add_parser("solve", help="run one solver and write trace/solution files")
    p.add_argument("--case", default="case118", help=case_help)
    p.add_argument("--method", type=_method, default="fem", help=methods_help)
    p.add_argument("--alpha", type=float, default=1.0, help="initial-angle scaling factor")
    p.add_argument("--out-dir", default=".", help="directory for output CSVs")
    _solver_flags(p)

    p = sub.add_parser("compare", help="run several solvers on one case")
    p.add_argument("--case", default="case118", help=case_help)
    p.add_argument("--method", type=_method, action="append", help=f"repeatable; default all. {methods_help}")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out-dir", help="also write compare.csv here")
    _solver_flags(p)

    p = sub.add_parser("sweep", help="initial-angle scaling robustness sweep")
    p.add_argument("--case", default="case118", help=case_help)
    p.add_argument("--method", type=_method, action="append", help=f"repeatable; default all. {methods_help}")
    p.add_argument("--alpha-lo", type=float, default=1.0)
    p.add_argument("--alpha-hi", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", action="store_true", help="evenly spaced alphas instead of seeded uniform draws")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", default="sweep_out")
    _solver_flags(p)

    p = sub.add_parser("region", help="local convergence region data (z and s eigenvalues)")
    p.add_argument("--scheme", type=str.upper, choices=["FEM", "BEM"], default="FEM")
    p.add_argument("--grid", default="0.05:0.05:3", help="lo:step:hi or comma list of step sizes")
    p.add_argument("--eta", type=float, help="factorization distortion (FEM only)")
    p.add_argument("--eps-res", type=float, help="residual distortion (FEM only)")
    p.add_argument("--out-dir", help="write region_<scheme>.csv here instead of stdout")
    return parser


def _cmd_solve(args) -> int:
    case = harness.resolve_case(args.case)
    overrides = _overrides(args) | {"record_states": True}
    report = harness.run_single(case, args.method, overrides, args.alpha)
    stem = f"{case.name or 'case'}_{args.method}"
    files = harness.write_single_outputs(case, report, Path(args.out_dir), stem)
    print(report.summary())
    if report.message:
        print(report.message)
    for f in files:
        print(f"wrote {f}")
    return 0 if report.converged else 1


def _cmd_compare(args) -> int:
    case = harness.resolve_case(args.case)
    methods = args.method or METHOD_NAMES
    result = harness.compare(case, methods, _overrides(args), args.alpha)
    print(result.table())
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.write_csv(out / "compare.csv")
    return 0 if result.all_converged and result.agree else 1


def _cmd_sweep(args) -> int:
    cfg = harness.SweepConfig(
        case=args.case,
        methods=tuple(args.method or METHOD_NAMES),
        alpha_lo=args.alpha_lo,
        alpha_hi=args.alpha_hi,
        samples=args.samples,
        seed=args.seed,
        grid=args.grid,
        overrides=_overrides(args),
        jobs=args.jobs,
        out_dir=args.out_dir,
    )
    result = harness.run_sweep(cfg)
    print(result.table())
    print(f"wrote sweep CSVs to {args.out_dir}")
    return 0


def _cmd_region(args) -> int:
    spec = analysis.PencilSpec(analysis.Scheme(args.scheme), args.eta, args.eps_res)
    spectrum = analysis.region_scan(spec, analysis.parse_grid(args.grid))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"region_{args.scheme.lower()}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            analysis.write_region(spectrum, fh)
        print(f"wrote {path}")
    else:
        analysis.write_region(spectrum, sys.stdout)
    return 0


COMMANDS = {"solve": _cmd_solve, "compare": _cmd_compare, "sweep": _cmd_sweep, "region": _cmd_region}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CaseFormatError, CaseValidationError, FileNotFoundError) as exc:
        print(f"newtonflow: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"newtonflow: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
