"""Problem adapters: anything with ``residual(y)`` and ``jacobian(y)``."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..casefile import NetworkCase
from ..network import PowerFlowModel, StateVector, model_for


class LinearFlowModel:
    """``g(y) = A (y - y_root)``: the Newton flow linearized at its root.

    With a scalar ``A`` this is the test model of the local convergence
    analysis; every scheme reduces to a fixed contraction factor.
    """

    def __init__(self, a=1.0, root=0.0):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        self.a = sp.csr_matrix(a)
        self.root = np.broadcast_to(np.asarray(root, dtype=float), (a.shape[0],)).copy()
        self.index = None

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def residual(self, y) -> np.ndarray:
        return self.a @ (np.asarray(y, dtype=float) - self.root)

    def jacobian(self, y) -> sp.csr_matrix:
        return self.a


def as_problem(problem):
    if isinstance(problem, NetworkCase):
        return model_for(problem)
    if not (hasattr(problem, "residual") and hasattr(problem, "jacobian")):
        raise TypeError(f"cannot solve {type(problem).__name__}: needs residual() and jacobian()")
    return problem


def initial_values(problem, y0) -> np.ndarray:
    if y0 is None:
        if isinstance(problem, PowerFlowModel):
            return problem.initial_state().values.copy()
        raise ValueError("y0 is required for this problem")
    if isinstance(y0, StateVector):
        return y0.values.astype(float).copy()
    return np.atleast_1d(np.asarray(y0, dtype=float)).copy()
