"""Dense symmetric linear-algebra kernels shared by the solver stack.

Symmetric matrices are plain float64 ``(n, n)`` arrays kept exactly
symmetric (``m[i, j] == m[j, i]`` bit for bit); :func:`symmetrize`
restores that property after any operation that may break it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SolverFailure(RuntimeError):
    """An SPD factorization or solve failed; carries a lambda_min estimate."""

    def __init__(self, message: str, lambda_min: float):
        super().__init__(message)
        self.lambda_min = lambda_min


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Exactly symmetric copy of ``m`` (floating addition commutes)."""
    return 0.5 * (m + m.T)


def is_exactly_symmetric(m: np.ndarray) -> bool:
    return bool(np.array_equal(m, m.T))


@dataclass(frozen=True)
class EigDecomposition:
    """Eigendecomposition ``m = q @ diag(lam) @ q.T`` with ``lam`` ascending."""

    q: np.ndarray
    lam: np.ndarray


def sym_eig(m: np.ndarray) -> EigDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending."""
    m = np.asarray(m, dtype=float)
    if not np.isfinite(m).all():
        raise ValueError("sym_eig: matrix has non-finite entries")
    lam, q = np.linalg.eigh(m)
    return EigDecomposition(q=q, lam=lam)


def psd_project(m: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) positive semidefinite matrix: clip negative eigenvalues."""
    dec = sym_eig(m)
    clipped = np.clip(dec.lam, 0.0, None)
    return symmetrize((dec.q * clipped) @ dec.q.T)


class SpdSolver:
    """Cached Cholesky factorization of an SPD matrix, reusable across solves.

    The matrix is regularized by ``1e-10 * tr(K)/n * I`` before factoring;
    one step of iterative refinement against the unregularized matrix keeps
    the solve residual near machine precision.
    """

    def __init__(self, k: np.ndarray):
        k = np.asarray(k, dtype=float)
        n = k.shape[0]
        reg = 1e-10 * float(np.trace(k)) / n
        self._k = k
        try:
            self._chol = scipy.linalg.cho_factor(
                k + reg * np.eye(n), lower=True, check_finite=False
            )
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            lam_min = float(np.linalg.eigvalsh(k)[0])
            raise SolverFailure(
                f"matrix is not positive definite after regularization "
                f"(lambda_min ~ {lam_min:.3e})",
                lam_min,
            ) from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        x = scipy.linalg.cho_solve(self._chol, rhs, check_finite=False)
        x = x + scipy.linalg.cho_solve(
            self._chol, rhs - self._k @ x, check_finite=False
        )
        if __debug__:
            resid = np.linalg.norm(self._k @ x - rhs)
            if resid > 1e-8 * np.linalg.norm(rhs) + 1e-300:
                lam_min = float(np.linalg.eigvalsh(self._k)[0])
                raise SolverFailure(
                    f"SPD solve residual {resid:.3e} exceeds tolerance "
                    f"(lambda_min ~ {lam_min:.3e})",
                    lam_min,
                )
        return x


def spd_solve(k: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """One-shot SPD solve; residual bound ``|K x - rhs| <= 1e-8 |rhs|``."""
    return SpdSolver(k).solve(rhs)
