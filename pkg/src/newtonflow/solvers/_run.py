from __future__ import annotations

import time

import numpy as np

from ..linalg import SingularMatrixError, condition_estimate, factorize
from .config import IterationRecord, Method, SolverConfig, SolverReport, Verdict
from .problems import as_problem, initial_values


def inf_norm(v) -> float:
    v = np.asarray(v)
    return float(np.max(np.abs(v))) if v.size else 0.0


class Run:
    """Bookkeeping shared by all schemes: records, verdicts, timing."""

    def __init__(self, problem, y0, cfg: SolverConfig, expected: tuple[Method, ...]):
        if cfg.method not in expected:
            raise ValueError(f"config method {cfg.method.value} not handled by this solver")
        self.problem = as_problem(problem)
        self.cfg = cfg
        self.y = initial_values(self.problem, y0)
        self.records: list[IterationRecord] = []
        self.rejected = 0
        self.states = [self.y.copy()] if cfg.record_states else None
        self._t0 = time.perf_counter()

    @property
    def k(self) -> int:
        return len(self.records) + 1

    def residual(self, y) -> np.ndarray:
        return self.problem.residual(y)

    def factorize_jacobian(self, y):
        jac = self.problem.jacobian(y)
        fac = factorize(jac)
        cond = condition_estimate(fac, jac) if self.cfg.estimate_condition else None
        return jac, fac, cond

    def flow(self, y) -> np.ndarray:
        """Newton-flow vector field ``-g_y(y)^-1 g(y)``."""
        return -factorize(self.problem.jacobian(y)).solve(self.residual(y))

    def step(self, y_new, g_new, h, inner=0, cond=None, deriv=None) -> Verdict | None:
        """Record an accepted outer step and judge it."""
        cfg = self.cfg
        dy = inf_norm(np.asarray(y_new) - self.y)
        gn = inf_norm(g_new)
        if not np.isfinite(dy):
            dy = float("inf")
        if not np.isfinite(gn):
            gn = float("inf")
        self.records.append(IterationRecord(self.k, float(h), int(inner), gn, dy, cond, deriv))
        if not (np.all(np.isfinite(y_new)) and np.isfinite(gn)) or gn > cfg.divergence_threshold:
            return Verdict.DIVERGED
        self.y = np.asarray(y_new, dtype=float).copy()
        if self.states is not None:
            self.states.append(self.y.copy())
        if dy < cfg.outer_tol and gn < cfg.residual_tol:
            return Verdict.CONVERGED
        return None

    def finish(self, verdict: Verdict, message: str = "") -> SolverReport:
        diverged_at = self.records[-1].k if verdict is Verdict.DIVERGED and self.records else None
        return SolverReport(
            method=self.cfg.method,
            verdict=verdict,
            iterations=self.records,
            final_state=self.y.copy(),
            index=getattr(self.problem, "index", None),
            wall_time=time.perf_counter() - self._t0,
            rejected_steps=self.rejected,
            diverged_at=diverged_at,
            message=message,
            states=self.states,
        )

    def singular(self, exc: SingularMatrixError) -> SolverReport:
        return self.finish(Verdict.SINGULAR_JACOBIAN, str(exc))

    def limit(self) -> SolverReport:
        return self.finish(Verdict.ITERATION_LIMIT, f"no convergence in {self.cfg.max_outer} outer iterations")
