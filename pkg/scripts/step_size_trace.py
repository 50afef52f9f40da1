"""Per-iteration step size, residual and one bus angle for a single solve.

    python scripts/step_size_trace.py --method BEM-J-QSS --alpha 1.5 --bus 2
"""
import argparse
import math

from newtonflow import harness
from newtonflow.network import model_for


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="case118")
    ap.add_argument("--method", default="BEM-J-QSS")
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--bus", type=int, default=2, help="bus id whose angle is printed")
    args = ap.parse_args()

    case = harness.resolve_case(args.case)
    model = model_for(case)
    report = harness.run_single(case, args.method, {"record_states": True}, args.alpha)
    labels = model.index.labels()
    col = labels.index(f"theta_{args.bus}") if f"theta_{args.bus}" in labels else None

    print(report.summary())
    print(f"{'k':>4}{'h_k':>12}{'inner':>7}{'|g|':>12}{'|dy|':>12}" + (f"{'theta [deg]':>14}" if col is not None else ""))
    for rec, y in zip(report.iterations, report.states[1:]):
        line = f"{rec.k:>4}{rec.h:>12.4g}{rec.inner_iters:>7}{rec.residual_norm:>12.3e}{rec.state_delta_norm:>12.3e}"
        if col is not None:
            line += f"{math.degrees(y[col]):>14.6f}"
        print(line)


if __name__ == "__main__":
    main()
