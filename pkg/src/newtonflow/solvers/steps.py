"""Step-size rules: QSS event estimate, inner-loop heuristic, quantizer."""
from __future__ import annotations

import math

import numpy as np


def qss_step(derivative, dq: float, h_max: float) -> float:
    """Time until the fastest state variable moves by one quantum.

    Each variable reaches its next quantization event after ``dq / |f_j|``;
    the global step is the smallest of these, clamped to ``(0, h_max]``.
    """
    if not dq > 0:
        raise ValueError("quantum must be positive")
    f = np.abs(np.asarray(derivative, dtype=float))
    if not np.all(np.isfinite(f)):
        raise ValueError("derivative must be finite")
    fmax = f.max(initial=0.0)
    if fmax == 0.0:
        return float(h_max)
    return float(min(dq / fmax, h_max))


def heuristic_step(prev_h: float, inner_iters: int, i_max: int, h_max: float) -> float:
    """Double after a fast inner solve, halve after a slow one."""
    if not prev_h > 0:
        raise ValueError("prev_h must be positive")
    if inner_iters <= 3:
        return min(2.0 * prev_h, h_max)
    if inner_iters >= math.ceil(3 * i_max / 4):
        return prev_h / 2.0
    return prev_h


def quantizer_update(y, q, dq: float) -> tuple[np.ndarray, np.ndarray]:
    """Refresh quantized values whose state has moved at least one quantum."""
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    if y.shape != q.shape:
        raise ValueError("y and q must have the same shape")
    events = np.flatnonzero(np.abs(y - q) >= dq)
    q_new = q.copy()
    q_new[events] = y[events]
    return q_new, events
