"""Dense kernels with explicit tolerances: blockwise Cholesky, SVD null spaces,
pivoted solves."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .assembly import MassMatrix
from .errors import InvalidInput, NonUnisolvent, NumericalFailure

__all__ = [
    "BlockFactor",
    "factor_blocks",
    "orthonormal_nullspace",
    "solve_linear",
    "condition_estimate",
    "RCOND_MIN",
]

log = logging.getLogger(__name__)

RCOND_MIN = 1e-13


@dataclass(frozen=True)
class BlockFactor:
    """Upper-triangular ``R_T`` per block with ``M_T = R_T^T R_T``."""

    R: np.ndarray  # (N, D, D)

    def apply(self, c: np.ndarray) -> np.ndarray:
        """``R @ c`` blockwise, for vectors or column stacks."""
        N, D, _ = self.R.shape
        c = np.asarray(c, dtype=float)
        return np.einsum("nij,njk->nik", self.R, c.reshape(N, D, -1)).reshape(c.shape)

    def solve(self, c: np.ndarray) -> np.ndarray:
        """``R^{-1} @ c`` blockwise."""
        N, D, _ = self.R.shape
        c = np.asarray(c, dtype=float)
        cb = c.reshape(N, D, -1)
        out = np.empty_like(cb)
        for n in range(N):
            out[n] = scipy.linalg.solve_triangular(self.R[n], cb[n], lower=False)
        return out.reshape(c.shape)

    def right_solve(self, A) -> np.ndarray:
        """``A @ R^{-1}`` for a dense or sparse row matrix ``A``."""
        A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        N, D, _ = self.R.shape
        out = np.empty_like(A)
        for n in range(N):
            blk = A[:, n * D:(n + 1) * D]
            # X R = blk  <=>  R^T X^T = blk^T
            out[:, n * D:(n + 1) * D] = scipy.linalg.solve_triangular(self.R[n], blk.T, trans="T", lower=False).T
        return out


def factor_blocks(m: MassMatrix) -> BlockFactor:
    R = np.empty_like(m.blocks)
    for n, blk in enumerate(m.blocks):
        try:
            R[n] = scipy.linalg.cholesky(blk, lower=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"mass block of triangle {n} is not positive definite") from exc
        err = np.linalg.norm(R[n].T @ R[n] - blk)
        if err > 1e-12 * np.linalg.norm(blk):
            raise NumericalFailure(f"Cholesky reconstruction error {err:.2e} on triangle {n}")
    return BlockFactor(R)


def orthonormal_nullspace(a, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of the numerical null space of ``a`` (columns).

    Singular values ``<= tol`` count as zero; the default threshold is
    ``max(rows, cols) * eps * sigma_max``.
    """
    A = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("matrix has non-finite entries")
    m, n = A.shape
    if m == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if len(s) else 0.0
    if tol is None:
        tol = max(m, n) * np.finfo(float).eps * smax
    rank = int(np.sum(s > tol))
    return vt[rank:].T.copy()


def condition_estimate(a: np.ndarray) -> float:
    """Reciprocal 1-norm condition number (0 for singular input)."""
    A = np.asarray(a, dtype=float)
    try:
        with warnings.catch_warnings():
            # exact singularity is reported through the return value
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError):
        return 0.0
    if np.any(np.diag(lu) == 0):
        return 0.0
    anorm = np.linalg.norm(A, 1)
    gecon = scipy.linalg.lapack.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    return float(rcond) if info == 0 else 0.0


def solve_linear(a, b) -> np.ndarray:
    """Partial-pivoting LU solve; raises :class:`NonUnisolvent` when rcond < 1e-13."""
    A = np.asarray(a, dtype=float)
    rhs = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput("solve_linear needs a square matrix")
    rcond = condition_estimate(A)
    log.debug("solve_linear: n=%d rcond=%.3e", A.shape[0], rcond)
    if rcond < RCOND_MIN:
        raise NonUnisolvent(f"system is numerically singular (rcond={rcond:.2e})")
    lu, piv = scipy.linalg.lu_factor(A)
    x = scipy.linalg.lu_solve((lu, piv), rhs)
    res = np.linalg.norm(A @ x - rhs)
    bound = 1e-10 * (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(rhs))
    if res > bound:
        raise NumericalFailure(f"residual {res:.2e} exceeds {bound:.2e}")
    return x
