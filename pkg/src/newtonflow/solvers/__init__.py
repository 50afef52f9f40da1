"""Newton-flow solvers: FEM, FDPF, RK4 and the BEM family."""
from __future__ import annotations

from .config import (
    TRACE_HEADER,
    IterationRecord,
    Method,
    SolverConfig,
    SolverReport,
    Verdict,
    write_states,
    write_trace,
)
from .explicit import rk4_step, solve_fdpf, solve_fem, solve_rk4
from .implicit import solve_bem
from .problems import LinearFlowModel, as_problem
from .steps import heuristic_step, qss_step, quantizer_update

__all__ = [
    "Method",
    "Verdict",
    "SolverConfig",
    "IterationRecord",
    "SolverReport",
    "TRACE_HEADER",
    "write_trace",
    "write_states",
    "LinearFlowModel",
    "as_problem",
    "solve",
    "solve_fem",
    "solve_fdpf",
    "solve_rk4",
    "solve_bem",
    "rk4_step",
    "qss_step",
    "heuristic_step",
    "quantizer_update",
]

_DISPATCH = {
    Method.FEM: solve_fem,
    Method.FDPF: solve_fdpf,
    Method.RK4: solve_rk4,
    Method.BEM_J1: solve_bem,
    Method.BEM_J: solve_bem,
    Method.BEM_J1_QSS: solve_bem,
    Method.BEM_J_QSS: solve_bem,
}


def solve(problem, y0=None, cfg: SolverConfig | None = None, **overrides) -> SolverReport:
    """Run the configured method. ``overrides`` are SolverConfig fields."""
    if cfg is None:
        cfg = SolverConfig(**overrides)
    elif overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return _DISPATCH[cfg.method](problem, y0, cfg)
