"""Dense kernels: Gram factorization, least-squares multipliers, residuals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class RankDeficiencyError(Exception):
    """Raised when JJ^T cannot be factorized even with regularization."""


# regularization ladder, scaled by (1 + ||JJ^T||_F)
_DELTA_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


@dataclass
class GramFactor:
    """Cholesky factor of A = J J^T + delta I."""

    m: int
    chol: tuple  # (c, lower) as returned by scipy cho_factor
    delta: float

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self.chol, rhs)


def gram_factor(J: np.ndarray) -> GramFactor:
    """Factor JJ^T, climbing the regularization ladder on breakdown."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    A = J @ J.T
    scale = 1.0 + np.linalg.norm(A, "fro")
    for d in _DELTA_LADDER:
        delta = d * scale if d > 0 else 0.0
        try:
            chol = scipy.linalg.cho_factor(A + delta * np.eye(A.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            continue
        except scipy.linalg.LinAlgError:
            continue
        return GramFactor(m=A.shape[0], chol=chol, delta=delta)
    raise RankDeficiencyError("JJ^T not positive definite after regularization")


def lsq_multipliers(J: np.ndarray, g: np.ndarray, factor: GramFactor | None = None):
    """Least-squares multipliers and the nullspace component of g.

    Solves (JJ^T) lam = -J g and returns (lam, g + J^T lam); the second
    output is the orthogonal projection of g onto the nullspace of J.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    g = np.asarray(g, dtype=float)
    if factor is None:
        factor = gram_factor(J)
    lam = factor.solve(-J @ g)
    g_t = g + J.T @ lam
    return lam, g_t


def nullspace_residual(J: np.ndarray, s: np.ndarray) -> float:
    """Infinity norm of J s."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    return float(np.max(np.abs(J @ s))) if J.size else 0.0
