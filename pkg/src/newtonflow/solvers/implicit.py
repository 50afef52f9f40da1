"""Backward Euler on the Newton flow with an inner Newton loop.

Each outer step solves ``phi(z) = g_y(z) (z - y_k) + h g(z) = 0`` for
``z = y_{k+1}``. The inner Newton iteration uses ``phi_y ~ (1 + h) g_y(z)``,
dropping the Hessian term.
"""
from __future__ import annotations

import numpy as np

from ..linalg import SingularMatrixError, factorize
from ._run import Run, inf_norm
from .config import IterationRecord, Method, SolverConfig, SolverReport, Verdict
from .steps import heuristic_step, qss_step

BEM_METHODS = (Method.BEM_J1, Method.BEM_J, Method.BEM_J1_QSS, Method.BEM_J_QSS)


def bem_inner(run: Run, y_k, h, fac0, g0, i_max, tol):
    """Inner Newton loop from ``z = y_k``.

    Returns ``(z, g(z), iterations, converged)``. At least one update is
    always taken; with ``i_max == 1`` convergence of ``phi`` is not checked.
    """
    problem = run.problem
    z = y_k
    phi = h * g0
    fac = fac0
    g = g0
    for i in range(1, i_max + 1):
        z = z - fac.solve(phi) / (1.0 + h)
        g = problem.residual(z)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(g))):
            return z, g, i, False
        if i_max == 1:
            return z, g, 1, True
        jac = problem.jacobian(z)
        phi = jac @ (z - y_k) + h * g
        if inf_norm(phi) < tol:
            return z, g, i, True
        if i < i_max:
            fac = factorize(jac)
    return z, g, i_max, False


def solve_bem(problem, y0, cfg: SolverConfig) -> SolverReport:
    """BEM-J1 / BEM-J / BEM-J1-QSS / BEM-J-QSS depending on ``cfg.method``.

    Step control: BEM-J1 keeps ``h0``; BEM-J adapts from the inner iteration
    count (unless ``fixed_step``); the QSS variants take ``h0`` for the first
    step and then the quantum-crossing estimate at each accepted state. A
    stalled inner loop halves the step and retries from ``y_k``.
    """
    run = Run(problem, y0, cfg, BEM_METHODS)
    method = cfg.method
    i_max = cfg.inner_limit
    h = cfg.h0
    while run.k <= cfg.max_outer:
        y_k = run.y
        try:
            _, fac0, cond = run.factorize_jacobian(y_k)
        except SingularMatrixError as exc:
            return run.singular(exc)
        g0 = run.residual(y_k)
        deriv = None
        if method.uses_qss and run.k > 1:
            f = -fac0.solve(g0)
            deriv = inf_norm(f)
            h = qss_step(f, cfg.dq, cfg.h_max) if np.all(np.isfinite(f)) else h

        for attempt in range(cfg.max_rejections + 1):
            try:
                z, g, inner, ok = bem_inner(run, y_k, h, fac0, g0, i_max, cfg.inner_tol)
            except SingularMatrixError:
                ok, inner = False, i_max
                if method.single_inner:
                    return run.singular(SingularMatrixError("singular Jacobian in inner loop"))
            if ok:
                break
            run.rejected += 1
            if attempt < cfg.max_rejections:
                h = h / 2.0
        else:
            run.records.append(IterationRecord(run.k, h, inner, float("inf"), float("inf"), cond, deriv))
            return run.finish(Verdict.DIVERGED, f"inner loop failed after {cfg.max_rejections} step halvings")

        verdict = run.step(z, g, h, inner, cond, deriv)
        if verdict is not None:
            return run.finish(verdict)
        if method is Method.BEM_J and not cfg.fixed_step:
            h = heuristic_step(h, inner, i_max, cfg.h_max)
        elif method is Method.BEM_J1:
            h = cfg.h0
    return run.limit()
