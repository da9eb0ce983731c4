"""Sparse symmetric systems with Dirichlet constraints.

All finite-element solves in the package go through this module: assembly from
coordinate triplets (deterministically ordered so repeated runs are bitwise
identical), constraint handling by row/column elimination, and a diagonally
preconditioned conjugate gradient for the reduced SPD system. A stabilized
Krylov method (BiCGStab) covers the non-symmetric case.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import bicgstab

DEFAULT_TOL = 1e-10


class SolverError(RuntimeError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass
class LinearSystem:
    """Sparse operator plus optional Dirichlet constraints.

    ``constrained_rows`` maps a row index to its fixed value(s); constrained
    rows and columns are eliminated before the iterative solve so the reduced
    operator stays symmetric.
    """

    dimension: int
    matrix: csr_matrix
    symmetric: bool = True
    constrained_rows: dict[int, np.ndarray | float] = field(default_factory=dict)

    def constrain(self, indices, values) -> "LinearSystem":
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        for i, idx in enumerate(indices):
            self.constrained_rows[int(idx)] = values[i]
        return self


def assemble(dimension: int, rows, cols, values, symmetric: bool = True) -> LinearSystem:
    """Build a LinearSystem from triplets; duplicates are summed.

    Triplets are sorted by (row, col) before summation so assembly is
    bitwise reproducible across runs.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if rows.size and (rows.min() < 0 or rows.max() >= dimension
                      or cols.min() < 0 or cols.max() >= dimension):
        raise IndexError("triplet index out of range")
    order = np.lexsort((cols, rows))
    rows, cols, values = rows[order], cols[order], values[order]
    if rows.size:
        new_group = np.ones(rows.size, dtype=bool)
        new_group[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new_group)
        summed = np.add.reduceat(values, starts)
        rows, cols, values = rows[starts], cols[starts], summed
    mat = csr_matrix((values, (rows, cols)), shape=(dimension, dimension))
    if symmetric:
        diff = (mat - mat.T)
        scale = max(abs(mat).max(), 1.0)
        if diff.nnz and abs(diff).max() > 1e-12 * scale:
            raise ValueError("matrix flagged symmetric is not symmetric")
    return LinearSystem(dimension, mat, symmetric=symmetric)


def _pcg(A, b, rtol, maxiter, callback=None):
    n = len(b)
    diag = A.diagonal().copy()
    diag[diag == 0.0] = 1.0
    inv_diag = 1.0 / diag
    x = np.zeros(n)
    r = b.copy()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, 0, 0.0
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    res = float(np.linalg.norm(r))
    for k in range(1, maxiter + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverError("matrix is not positive definite", k, res)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r))
        if callback is not None:
            callback(x.copy(), res)
        if res <= rtol * bnorm:
            return x, k, res
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError("conjugate gradient did not converge", maxiter, res)


def solve(system: LinearSystem, rhs, tol: float = DEFAULT_TOL,
          maxiter: int | None = None, callback=None) -> np.ndarray:
    """Solve the (constrained) system for one or several right-hand sides.

    Constrained entries of the result equal their fixed values exactly; the
    free part satisfies ``||A x - b|| <= tol * ||b||`` on the reduced system.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    single = rhs.ndim == 1
    b = rhs[:, None] if single else rhs.copy()
    if b.shape[0] != system.dimension:
        raise ValueError("rhs size does not match system dimension")
    n = system.dimension
    nrhs = b.shape[1]
    x = np.zeros((n, nrhs))

    if system.constrained_rows:
        fixed_idx = np.array(sorted(system.constrained_rows), dtype=np.int64)
        fixed_vals = np.vstack([
            np.broadcast_to(np.asarray(system.constrained_rows[int(i)], dtype=np.float64),
                            (nrhs,))
            for i in fixed_idx])
        free = np.ones(n, dtype=bool)
        free[fixed_idx] = False
        free_idx = np.flatnonzero(free)
        A = system.matrix
        A_ff = A[free_idx][:, free_idx].tocsr()
        A_fc = A[free_idx][:, fixed_idx].tocsr()
        b_f = b[free_idx] - A_fc @ fixed_vals
        x[fixed_idx] = fixed_vals
    else:
        free_idx = np.arange(n)
        A_ff = system.matrix
        b_f = b

    if maxiter is None:
        maxiter = max(10 * len(free_idx), 50)
    for j in range(nrhs):
        if system.symmetric:
            xj, _, _ = _pcg(A_ff, b_f[:, j], tol, maxiter, callback=callback)
        else:
            xj, info = bicgstab(A_ff, b_f[:, j], rtol=tol, atol=0.0, maxiter=maxiter)
            if info != 0:
                res = float(np.linalg.norm(A_ff @ xj - b_f[:, j]))
                raise SolverError("bicgstab did not converge", abs(info), res)
        x[free_idx, j] = xj
    return x[:, 0] if single else x
