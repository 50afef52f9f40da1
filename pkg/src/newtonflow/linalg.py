"""Sparse LU solves and 1-norm condition estimates.

Matrices are plain ``scipy.sparse`` matrices. Factorization is SuperLU with
partial pivoting; singular matrices raise :class:`SingularMatrixError` so the
calling solver decides what to do.
"""
from __future__ import annotations

from typing import IO

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

__all__ = [
    "SingularMatrixError",
    "Factorization",
    "factorize",
    "solve",
    "condition_estimate",
    "inverse_onenorm_estimate",
    "write_triplets",
    "read_triplets",
]


class SingularMatrixError(ArithmeticError):
    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message if pivot is None else f"{message} (pivot {pivot})")
        self.pivot = pivot


class Factorization:
    """LU factors of a square sparse matrix; immutable once built."""

    def __init__(self, lu, n: int):
        self._lu = lu
        self.n = n

    def solve(self, b: np.ndarray, transpose: bool = False) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError(f"rhs has length {b.shape[0]}, expected {self.n}")
        return self._lu.solve(b, trans="T" if transpose else "N")


def _first_zero_pivot(dense: np.ndarray) -> int | None:
    _, _, u = scipy.linalg.lu(dense)
    d = np.abs(np.diag(u))
    scale = d.max() if d.size and d.max() > 0 else 1.0
    bad = np.flatnonzero(d <= dense.shape[0] * np.finfo(float).eps * scale)
    return int(bad[0]) if bad.size else None


def factorize(a) -> Factorization:
    """LU-factorize ``a``; raises :class:`SingularMatrixError` on (numerical) singularity."""
    a = sp.csc_matrix(a, dtype=float)
    n, m = a.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {a.shape}")
    if not np.all(np.isfinite(a.data)):
        raise SingularMatrixError("matrix has non-finite entries")
    if n == 0:
        raise SingularMatrixError("empty matrix")
    try:
        lu = splu(a, permc_spec="COLAMD")
    except RuntimeError as exc:
        pivot = _first_zero_pivot(a.toarray()) if n <= 2000 else None
        raise SingularMatrixError(f"singular matrix: {exc}", pivot) from None
    u = np.abs(lu.U.diagonal())
    scale = u.max()
    bad = np.flatnonzero(~(u > n * np.finfo(float).eps * scale))
    if bad.size:
        raise SingularMatrixError("numerically singular matrix", int(bad[0]))
    return Factorization(lu, n)


def solve(f: Factorization, b: np.ndarray) -> np.ndarray:
    return f.solve(b)


def inverse_onenorm_estimate(f: Factorization, max_iter: int = 5) -> float:
    """Hager's method with Higham's safeguard for ``||A^-1||_1``."""
    n = f.n
    x = np.full(n, 1.0 / n)
    est = 0.0
    prev_j = -1
    for k in range(max_iter):
        y = f.solve(x)
        new_est = float(np.abs(y).sum())
        if k > 0 and new_est <= est:
            break
        est = new_est
        xi = np.where(y >= 0, 1.0, -1.0)
        z = f.solve(xi, transpose=True)
        j = int(np.argmax(np.abs(z)))
        if k > 0 and (np.abs(z[j]) <= z @ x or j == prev_j):
            break
        x = np.zeros(n)
        x[j] = 1.0
        prev_j = j
    # alternating test vector catches matrices that fool the gradient ascent
    if n > 1:
        alt = np.array([(-1) ** i * (1 + i / (n - 1)) for i in range(n)])
    else:
        alt = np.ones(1)
    alt_est = 2.0 * float(np.abs(f.solve(alt)).sum()) / (3.0 * n)
    return max(est, alt_est)


def condition_estimate(f: Factorization, a) -> float:
    """Estimate of the 1-norm condition number ``||A||_1 ||A^-1||_1``."""
    a = sp.csc_matrix(a)
    norm_a = float(abs(a).sum(axis=0).max()) if a.nnz else 0.0
    return norm_a * inverse_onenorm_estimate(f)


def write_triplets(a, sink: IO[str]) -> None:
    """Coordinate text: header ``n_rows n_cols``, then ``row col value`` per entry."""
    c = sp.coo_matrix(a)
    order = np.lexsort((c.col, c.row))
    sink.write(f"{c.shape[0]} {c.shape[1]}\n")
    for k in order:
        sink.write(f"{c.row[k]} {c.col[k]} {_fmt_value(c.data[k])}\n")


def _fmt_value(v) -> str:
    if np.iscomplexobj(v):
        return f"{float(v.real)!r}{float(v.imag):+.17g}j"
    return repr(float(v))


def read_triplets(source: IO[str]) -> sp.csr_matrix:
    lines = [ln.split() for ln in source.read().splitlines() if ln.strip()]
    n_rows, n_cols = (int(v) for v in lines[0])
    rows, cols, vals = [], [], []
    for parts in lines[1:]:
        rows.append(int(parts[0]))
        cols.append(int(parts[1]))
        vals.append(complex(parts[2]) if "j" in parts[2] else float(parts[2]))
    dtype = complex if any(isinstance(v, complex) for v in vals) else float
    return sp.csr_matrix((np.array(vals, dtype=dtype), (rows, cols)), shape=(n_rows, n_cols))
