"""Complex sparse linear algebra used by the FEM solvers.

CSR storage and the factorizations are delegated to scipy (SuperLU with its
deterministic COLAMD fill-reducing ordering); this module pins the contracts
the rest of the package relies on: residual guarantees, singularity
reporting, and a preconditioned BiCGStab fallback.
"""

from __future__ import annotations

import re

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, SingularMatrixError


def csr(rows, cols, values, n):
    """Assemble an n x n complex CSR matrix from triplets (duplicates summed)."""
    a = sp.coo_matrix((np.asarray(values, dtype=complex),
                       (np.asarray(rows), np.asarray(cols))),
                      shape=(n, n)).tocsr()
    a.sum_duplicates()
    a.sort_indices()
    return a


def validate_csr(a):
    """Check the CSR structural invariants."""
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix not square")
    indptr, indices = a.indptr, a.indices
    if np.any(np.diff(indptr) < 0):
        raise ValueError("row pointer not monotone")
    for i in range(a.shape[0]):
        row = indices[indptr[i]:indptr[i + 1]]
        if len(row) and (np.any(np.diff(row) <= 0)):
            raise ValueError(f"row {i}: column indices not sorted/unique")
    return True


def matvec(a, x):
    return a @ x


class Factorization:
    """LU factorization with the RCM permutation baked in."""

    def __init__(self, lu, perm, n):
        self._lu = lu
        self._perm = perm
        self._inv = np.argsort(perm)
        self.n = n

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        x = np.empty_like(b)
        xp = self._lu.solve(b[self._perm])
        x[self._perm] = xp
        return x


def factorize(a):
    """Sparse LU with partial pivoting; raises SingularMatrixError."""
    a = sp.csr_matrix(a, dtype=complex)
    n = a.shape[0]
    empty_rows = np.flatnonzero(np.diff(a.indptr) == 0)
    if len(empty_rows):
        raise SingularMatrixError(
            f"structurally singular: row {empty_rows[0]} has no entries",
            pivot_index=int(empty_rows[0]))
    perm = np.arange(n, dtype=np.int64)
    try:
        lu = spla.splu(a.tocsc(), permc_spec="COLAMD")
    except RuntimeError as exc:
        match = re.search(r"(\d+)", str(exc))
        pivot = int(match.group(1)) if match else -1
        raise SingularMatrixError(str(exc), pivot_index=pivot) from exc
    return Factorization(lu, perm, n)


def solve(factorization, b):
    return factorization.solve(b)


class BorderedFactorization:
    """LU of [[A, w], [w^T, 0]] with RCM applied to A only.

    Keeping the dense multiplier row/column last preserves A's band
    structure, so the border adds only O(nnz(L)) work.
    """

    def __init__(self, a, w):
        a = sp.csr_matrix(a, dtype=complex)
        n = a.shape[0]
        perm = np.arange(n, dtype=np.int64)
        wp = np.asarray(w, dtype=complex)
        aug = sp.bmat([[a, sp.csr_matrix(wp[:, None])],
                       [sp.csr_matrix(wp[None, :]), None]], format="csc")
        try:
            self._lu = spla.splu(aug, permc_spec="COLAMD")
        except RuntimeError as exc:
            match = re.search(r"(\d+)", str(exc))
            raise SingularMatrixError(
                str(exc), pivot_index=int(match.group(1)) if match else -1
            ) from exc
        self._perm = perm
        self.n = n

    def solve(self, b, constraint_value=0.0):
        rhs = np.concatenate([np.asarray(b, dtype=complex)[self._perm],
                              [constraint_value]])
        y = self._lu.solve(rhs)
        x = np.empty(self.n, dtype=complex)
        x[self._perm] = y[:-1]
        return x, y[-1]


def factorize_bordered(a, w):
    """Factorization of the zero-mean (Lagrange) augmented system."""
    return BorderedFactorization(a, w)


def solve_direct(a, b):
    """factorize + solve in one call."""
    return factorize(a).solve(b)


def solve_iterative(a, b, tol=1e-12, maxiter=None):
    """Diagonally preconditioned BiCGStab fallback for large systems."""
    a = sp.csr_matrix(a, dtype=complex)
    n = a.shape[0]
    if maxiter is None:
        maxiter = 10 * n
    d = a.diagonal()
    d = np.where(np.abs(d) > 0, d, 1.0)
    pre = spla.LinearOperator((n, n), matvec=lambda x: x / d, dtype=complex)
    history = []

    def callback(xk):
        history.append(float(np.linalg.norm(b - a @ xk)))

    x, info = spla.bicgstab(a, b, rtol=tol, atol=0.0, maxiter=maxiter,
                            M=pre, callback=callback)
    if info != 0:
        raise ConvergenceError(
            f"bicgstab did not converge (info={info}) after {len(history)} "
            "iterations", residual_history=history)
    return x


def relative_residual(a, x, b):
    nb = np.linalg.norm(b)
    if nb == 0:
        return float(np.linalg.norm(a @ x))
    return float(np.linalg.norm(a @ x - b) / nb)


def write_matrix_market(a, path):
    """Debug export in Matrix Market coordinate format."""
    from scipy.io import mmwrite
    mmwrite(str(path), sp.coo_matrix(a))
