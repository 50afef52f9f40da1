"""Experiment drivers: single solves, method comparisons and alpha sweeps.

Exit-code mapping used by the CLI: 0 when every requested solve converged
(and, for comparisons, the converged states agree), 1 when any solve ended
Diverged / IterationLimit / SingularJacobian, 2 for usage or input errors.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .casefile import NetworkCase, bundled_case, bundled_case_names, load_case, write_solution
from .network import PowerFlowModel, model_for
from .solvers import Method, SolverConfig, SolverReport, Verdict, solve, write_states, write_trace

AGREEMENT_TOL = 1e-6


def resolve_case(spec: str | Path) -> NetworkCase:
    """A path to a ``.m`` file, or the name of a bundled case."""
    path = Path(spec)
    if path.exists():
        return load_case(path)
    if str(spec) in bundled_case_names():
        return bundled_case(str(spec))
    raise FileNotFoundError(f"case {str(spec)!r} not found (bundled: {', '.join(bundled_case_names())})")


def make_config(method: Method | str, overrides: dict | None = None) -> SolverConfig:
    return SolverConfig(method=Method.parse(method), **(overrides or {}))


def run_single(case: NetworkCase, method, overrides=None, alpha: float = 1.0) -> SolverReport:
    model = model_for(case)
    return solve(model, model.initial_state(alpha), make_config(method, overrides))


def write_single_outputs(case: NetworkCase, report: SolverReport, out_dir: Path, stem: str) -> list[Path]:
    """Trace (always), per-iteration states (if recorded) and, when converged, the solution table."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    trace = out_dir / f"{stem}_trace.csv"
    with trace.open("w", encoding="utf-8", newline="") as fh:
        write_trace(report, fh)
    written.append(trace)
    if report.states is not None:
        states = out_dir / f"{stem}_states.csv"
        with states.open("w", encoding="utf-8", newline="") as fh:
            write_states(report, fh)
        written.append(states)
    if report.converged:
        sol = out_dir / f"{stem}_solution.csv"
        with sol.open("w", encoding="utf-8", newline="") as fh:
            write_solution(case, model_for(case).back_substitute(report.final_state), fh)
        written.append(sol)
    return written


# -- comparison ---------------------------------------------------------------


@dataclass
class Comparison:
    reports: dict[Method, SolverReport]
    max_deviation: float | None

    @property
    def agree(self) -> bool:
        return self.max_deviation is None or self.max_deviation < AGREEMENT_TOL

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.reports.values())

    def table(self) -> str:
        lines = [f"{'Method':<12}{'Verdict':<18}{'Main loop':>10}{'Inner loop':>12}{'CPU time [s]':>14}"]
        for m, r in self.reports.items():
            inner = str(r.inner_iterations) if m.is_bem else "--"
            lines.append(
                f"{m.value:<12}{r.verdict.value:<18}{r.outer_iterations:>10}{inner:>12}{r.wall_time:>14.4f}"
            )
        if self.max_deviation is not None:
            lines.append(f"max state deviation between converged methods: {self.max_deviation:.3e}")
        return "\n".join(lines)

    def write_csv(self, path: Path) -> None:
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write("method,verdict,main_loop,inner_loop,cpu_time\n")
            for m, r in self.reports.items():
                inner = str(r.inner_iterations) if m.is_bem else ""
                fh.write(f"{m.value},{r.verdict.value},{r.outer_iterations},{inner},{r.wall_time:.6f}\n")


def max_pairwise_deviation(states: Sequence[np.ndarray]) -> float | None:
    if len(states) < 2:
        return None
    ref = states[0]
    return max(float(np.max(np.abs(s - ref))) for s in states[1:])


def compare(case: NetworkCase, methods: Sequence, overrides=None, alpha: float = 1.0) -> Comparison:
    if not methods:
        raise ValueError("need at least one method")
    reports = {Method.parse(m): run_single(case, m, overrides, alpha) for m in methods}
    finals = [r.final_state for r in reports.values() if r.converged]
    return Comparison(reports, max_pairwise_deviation(finals))


# -- alpha sweep --------------------------------------------------------------


@dataclass
class SweepConfig:
    case: str = "case118"
    methods: tuple[str, ...] = tuple(m.value for m in Method)
    alpha_lo: float = 1.0
    alpha_hi: float = 2.0
    samples: int = 500
    seed: int = 0
    grid: bool = False
    overrides: dict = field(default_factory=dict)
    jobs: int = 1
    out_dir: str | None = None
    allow_low_alpha: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.alpha_hi < self.alpha_lo:
            raise ValueError("alpha_hi must be >= alpha_lo")
        if self.alpha_lo < 1 and not self.allow_low_alpha:
            raise ValueError("alpha_lo < 1 requires allow_low_alpha")
        if not self.alpha_lo > 0:
            raise ValueError("alpha must stay positive")
        self.methods = tuple(Method.parse(m).value for m in self.methods)


def sample_alphas(cfg: SweepConfig) -> np.ndarray:
    """Samples in ``(lo, hi]``: seeded uniform draws, or an even grid."""
    lo, hi = cfg.alpha_lo, cfg.alpha_hi
    if hi == lo:
        return np.array([hi])
    if cfg.grid:
        return lo + (hi - lo) * np.arange(1, cfg.samples + 1) / cfg.samples
    rng = np.random.default_rng(cfg.seed)
    # 1 - U[0, 1) lies in (0, 1], so the interval is open at lo and closed at hi
    return lo + (hi - lo) * (1.0 - rng.random(cfg.samples))


@dataclass(frozen=True)
class SweepRun:
    sample: int
    alpha: float
    method: str
    verdict: str
    outer: int
    inner: int
    wall_time: float


@dataclass(frozen=True)
class MethodSummary:
    method: str
    converged_pct: float
    max_alpha: float | None
    total_runs: int
    stragglers: tuple[float, ...]


@dataclass
class SweepResult:
    config: SweepConfig
    alphas: np.ndarray
    runs: list[SweepRun]
    summaries: dict[str, MethodSummary]
    disagreements: list[tuple[int, float]]

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        runs_csv = out / "sweep_runs.csv"
        with runs_csv.open("w", encoding="utf-8", newline="") as fh:
            fh.write("sample,alpha,method,verdict,outer,inner\n")
            for r in self.runs:
                fh.write(f"{r.sample},{r.alpha:.12g},{r.method},{r.verdict},{r.outer},{r.inner}\n")
        summary_csv = out / "sweep_summary.csv"
        with summary_csv.open("w", encoding="utf-8", newline="") as fh:
            fh.write("method,converged_pct,max_alpha,total_runs\n")
            for s in self.summaries.values():
                ma = "" if s.max_alpha is None else f"{s.max_alpha:.12g}"
                fh.write(f"{s.method},{s.converged_pct:.2f},{ma},{s.total_runs}\n")
        timing_csv = out / "sweep_timing.csv"
        with timing_csv.open("w", encoding="utf-8", newline="") as fh:
            fh.write("sample,method,wall_time\n")
            for r in self.runs:
                fh.write(f"{r.sample},{r.method},{r.wall_time:.6f}\n")
        meta = out / "sweep_meta.json"
        cfg = self.config
        meta.write_text(
            json.dumps(
                {
                    "case": cfg.case,
                    "alpha_lo": cfg.alpha_lo,
                    "alpha_hi": cfg.alpha_hi,
                    "samples": len(self.alphas),
                    "sampling": "grid" if cfg.grid else "uniform",
                    "seed": cfg.seed,
                    "overrides": cfg.overrides,
                    "stragglers": {m: list(s.stragglers) for m, s in self.summaries.items()},
                    "disagreements": [{"sample": i, "max_deviation": d} for i, d in self.disagreements],
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        return [runs_csv, summary_csv, timing_csv, meta]

    def table(self) -> str:
        lines = [f"{'Method':<12}{'Convergence [%]':>16}{'max alpha':>12}{'runs':>7}"]
        for s in self.summaries.values():
            ma = "--" if s.max_alpha is None else f"{s.max_alpha:.4f}"
            lines.append(f"{s.method:<12}{s.converged_pct:>16.2f}{ma:>12}{s.total_runs:>7}")
            if s.stragglers:
                lines.append(f"  non-converged below max alpha: {', '.join(f'{a:.4f}' for a in s.stragglers)}")
        if self.disagreements:
            lines.append(f"samples where converged methods disagree (>{AGREEMENT_TOL:g}): {len(self.disagreements)}")
        return "\n".join(lines)


_WORKER: dict = {}


def _worker_init(case: NetworkCase):
    _WORKER["model"] = PowerFlowModel(case)


def _sweep_task(args):
    sample, alpha, method, overrides = args
    model: PowerFlowModel = _WORKER["model"]
    report = solve(model, model.initial_state(alpha), make_config(method, overrides))
    return (
        SweepRun(sample, float(alpha), method, report.verdict.value, report.outer_iterations,
                 report.inner_iterations, report.wall_time),
        report.final_state if report.converged else None,
    )


def run_sweep(cfg: SweepConfig, case: NetworkCase | None = None) -> SweepResult:
    """Solve every (alpha, method) pair; failures are recorded, never raised."""
    case = resolve_case(cfg.case) if case is None else case
    alphas = sample_alphas(cfg)
    tasks = [(i, a, m, cfg.overrides) for i, a in enumerate(alphas) for m in cfg.methods]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs, initializer=_worker_init, initargs=(case,)) as pool:
            results = list(pool.map(_sweep_task, tasks, chunksize=max(1, len(tasks) // (8 * cfg.jobs))))
    else:
        _worker_init(case)
        results = [_sweep_task(t) for t in tasks]

    order = {m: k for k, m in enumerate(cfg.methods)}
    results.sort(key=lambda item: (order[item[0].method], item[0].sample))
    runs = [r for r, _ in results]

    finals: dict[int, list[np.ndarray]] = {}
    for run, state in results:
        if state is not None:
            finals.setdefault(run.sample, []).append(state)
    disagreements = []
    for i in sorted(finals):
        dev = max_pairwise_deviation(finals[i])
        if dev is not None and dev >= AGREEMENT_TOL:
            disagreements.append((i, dev))

    summaries = {}
    for m in cfg.methods:
        mine = [r for r in runs if r.method == m]
        ok = [r.alpha for r in mine if r.verdict == Verdict.CONVERGED.value]
        max_alpha = max(ok) if ok else None
        stragglers = ()
        if max_alpha is not None:
            stragglers = tuple(sorted(r.alpha for r in mine if r.verdict != Verdict.CONVERGED.value and r.alpha < max_alpha))
        summaries[m] = MethodSummary(m, 100.0 * len(ok) / len(mine), max_alpha, len(mine), stragglers)
    result = SweepResult(cfg, alphas, runs, summaries, disagreements)
    if cfg.out_dir:
        result.write(cfg.out_dir)
    return result


def default_jobs() -> int:
    return max(1, min(8, os.cpu_count() or 1))
