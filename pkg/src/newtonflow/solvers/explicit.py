"""Explicit discretizations of the Newton flow and fast decoupled power flow."""
from __future__ import annotations

import numpy as np

from ..linalg import SingularMatrixError, factorize
from ._run import Run, inf_norm
from .config import IterationRecord, Method, SolverConfig, SolverReport, Verdict


def solve_fem(problem, y0, cfg: SolverConfig) -> SolverReport:
    """Forward Euler with fixed step ``h0``; ``h0 = 1`` is plain Newton."""
    run = Run(problem, y0, cfg, (Method.FEM,))
    h = cfg.h0
    g = run.residual(run.y)
    while run.k <= cfg.max_outer:
        try:
            _, fac, cond = run.factorize_jacobian(run.y)
        except SingularMatrixError as exc:
            return run.singular(exc)
        y_new = run.y + fac.solve(-h * g)
        g_new = run.residual(y_new)
        verdict = run.step(y_new, g_new, h, cond=cond)
        if verdict is not None:
            return run.finish(verdict)
        g = g_new
    return run.limit()


def solve_fdpf(problem, y0, cfg: SolverConfig) -> SolverReport:
    """XB fast decoupled power flow; one outer iteration is a P-theta plus a Q-V sweep."""
    run = Run(problem, y0, cfg, (Method.FDPF,))
    model = run.problem
    if not hasattr(model, "fdpf_matrices"):
        raise TypeError("FDPF needs a power-flow model (B' and B'' matrices)")
    na = model.n_angle
    try:
        bp, bpp = model.fdpf_matrices()
        fac_p = factorize(bp) if na else None
        fac_q = factorize(bpp) if model.n > na else None
    except SingularMatrixError as exc:
        return run.singular(exc)
    while run.k <= cfg.max_outer:
        y = run.y.copy()
        if fac_p is not None:
            vm, _ = model.voltages(y)
            dp = model.residual(y)[:na] / vm[model.ang_pos]
            y[:na] -= fac_p.solve(dp)
        if fac_q is not None:
            vm, _ = model.voltages(y)
            dq = model.residual(y)[na:] / vm[model.mag_pos]
            y[na:] -= fac_q.solve(dq)
        verdict = run.step(y, model.residual(y), cfg.h0)
        if verdict is not None:
            return run.finish(verdict)
    return run.limit()


def rk4_step(flow, y, h, k1=None):
    """One classical RK4 step of ``y' = flow(y)``; ``k1`` may be reused."""
    k1 = flow(y) if k1 is None else k1
    k2 = flow(y + 0.5 * h * k1)
    k3 = flow(y + 0.5 * h * k2)
    k4 = flow(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_factor(err: float, tol: float) -> float:
    if err == 0.0:
        return 4.0
    return min(4.0, max(0.25, 0.9 * (tol / err) ** 0.2))


def solve_rk4(problem, y0, cfg: SolverConfig) -> SolverReport:
    """RK4 with step-doubling error control.

    The full step and two half steps are compared; ``err = ||y_full -
    y_half||_inf / 15`` must stay below ``rk4_tol``. The two-half-step state
    is kept. Steps are capped at ``rk4_h_max``: the linearized flow has all
    eigenvalues at -1, so larger steps leave the RK4 stability interval and
    the iteration stalls instead of converging.
    """
    run = Run(problem, y0, cfg, (Method.RK4,))
    h_cap = min(cfg.h_max, cfg.rk4_h_max)
    h = min(cfg.h0, h_cap)
    streak = 0
    while run.k <= cfg.max_outer:
        y = run.y
        try:
            k1 = run.flow(y)
            y_full = rk4_step(run.flow, y, h, k1)
            y_half = rk4_step(run.flow, rk4_step(run.flow, y, 0.5 * h, k1), 0.5 * h)
        except SingularMatrixError as exc:
            return run.singular(exc)
        err = inf_norm(y_full - y_half) / 15.0
        if not np.isfinite(err) or err >= cfg.rk4_tol:
            run.rejected += 1
            streak += 1
            if streak > cfg.max_rejections:
                run.records.append(IterationRecord(run.k, h, 0, float("inf"), float("inf")))
                return run.finish(Verdict.DIVERGED, "step repeatedly rejected by error control")
            h *= 0.25 if not np.isfinite(err) else _rk4_factor(err, cfg.rk4_tol)
            continue
        streak = 0
        verdict = run.step(y_half, run.residual(y_half), h)
        if verdict is not None:
            return run.finish(verdict)
        h = min(h * _rk4_factor(err, cfg.rk4_tol), h_cap)
    return run.limit()
