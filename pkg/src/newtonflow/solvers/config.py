"""Solver configuration, per-iteration records and reports."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import IO

import numpy as np

from ..network import StateIndex, StateVector


class Method(enum.Enum):
    FEM = "FEM"
    FDPF = "FDPF"
    RK4 = "RK4"
    BEM_J1 = "BEM-J1"
    BEM_J = "BEM-J"
    BEM_J1_QSS = "BEM-J1-QSS"
    BEM_J_QSS = "BEM-J-QSS"

    @classmethod
    def parse(cls, name: "str | Method") -> "Method":
        if isinstance(name, Method):
            return name
        key = str(name).strip().upper().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(m.value for m in cls)}")

    @property
    def is_bem(self) -> bool:
        return self.value.startswith("BEM")

    @property
    def single_inner(self) -> bool:
        return self in (Method.BEM_J1, Method.BEM_J1_QSS)

    @property
    def uses_qss(self) -> bool:
        return self.value.endswith("QSS")


class Verdict(enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    ITERATION_LIMIT = "IterationLimit"
    SINGULAR_JACOBIAN = "SingularJacobian"


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.FEM
    h0: float = 1.0
    dq: float = 20.0
    h_max: float = 8000.0
    outer_tol: float = 1e-8
    residual_tol: float = 1e-8
    max_outer: int = 200
    max_inner: int | None = None
    inner_tol: float = 1e-8
    divergence_threshold: float = 1e6
    estimate_condition: bool = False
    # explicit RK4 controller
    rk4_tol: float = 1e-3
    rk4_h_max: float = 2.5
    # BEM inner-loop failure policy
    max_rejections: int = 8
    # BEM-J only: keep h = h0 instead of the inner-loop heuristic
    fixed_step: bool = False
    record_states: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")
        if not self.dq > 0:
            raise ValueError("dq must be positive")
        if not self.h_max >= self.h0:
            raise ValueError("h_max must be >= h0")
        if self.max_inner is not None and self.max_inner < 1:
            raise ValueError("max_inner must be >= 1")
        for name in ("outer_tol", "residual_tol", "inner_tol", "rk4_tol", "rk4_h_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")

    @property
    def inner_limit(self) -> int:
        if self.method.single_inner:
            return 1
        return 20 if self.max_inner is None else self.max_inner


@dataclass(frozen=True)
class IterationRecord:
    k: int
    h: float
    inner_iters: int
    residual_norm: float
    state_delta_norm: float
    condition_estimate: float | None = None
    derivative_norm: float | None = None


@dataclass
class SolverReport:
    method: Method
    verdict: Verdict
    iterations: list[IterationRecord]
    final_state: np.ndarray
    index: StateIndex | None = None
    wall_time: float = 0.0
    rejected_steps: int = 0
    diverged_at: int | None = None
    message: str = ""
    states: list[np.ndarray] | None = None

    @property
    def converged(self) -> bool:
        return self.verdict is Verdict.CONVERGED

    @property
    def outer_iterations(self) -> int:
        return len(self.iterations)

    @property
    def inner_iterations(self) -> int:
        return sum(r.inner_iters for r in self.iterations)

    @property
    def state_vector(self) -> StateVector:
        if self.index is None:
            raise ValueError("report has no state index (not a power-flow problem)")
        return StateVector(self.final_state, self.index)

    def summary(self) -> str:
        inner = f", inner {self.inner_iterations}" if self.method.is_bem else ""
        return (
            f"{self.method.value}: {self.verdict.value} after {self.outer_iterations} outer{inner}"
            f" iterations, {self.wall_time:.3f} s"
        )


TRACE_HEADER = "k,h_k,inner_iters,residual_norm,state_delta_norm,cond_est"


def write_trace(report: SolverReport, sink: IO[str]) -> None:
    """One CSV row per outer iteration."""
    sink.write(TRACE_HEADER + "\n")
    for r in report.iterations:
        cond = "" if r.condition_estimate is None else f"{r.condition_estimate:.10g}"
        sink.write(
            f"{r.k},{r.h:.10g},{r.inner_iters},{r.residual_norm:.10g},{r.state_delta_norm:.10g},{cond}\n"
        )


def write_states(report: SolverReport, sink: IO[str]) -> None:
    """Per-iteration state entries (row 0 is the initial state)."""
    if report.states is None:
        raise ValueError("report was produced without record_states=True")
    n = len(report.final_state)
    labels = report.index.labels() if report.index is not None else [f"y{j}" for j in range(n)]
    sink.write("k," + ",".join(labels) + "\n")
    for k, y in enumerate(report.states):
        sink.write(f"{k}," + ",".join(f"{v:.12g}" for v in y) + "\n")
