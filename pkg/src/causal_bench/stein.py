"""Stein estimators of the score ``grad log p(x)`` and its Jacobian.

With an RBF kernel ``k`` of bandwidth ``s`` and Gram matrix ``K`` over the
sample rows, integration by parts against the kernel features gives

    score:      G = -(K + eta I)^{-1} A1,   A1[i, j] = sum_k d/dx_kj k(x_k, x_i)
    Jacobian:   J[:, c, j] = -G_c G_j + (K + eta I)^{-1} A2_cj,
                A2_cj[i] = sum_k d^2/(dx_kc dx_kj) k(x_k, x_i)

where ``eta = ridge * n``. All kernel sums are reduced to Gram-matrix
products, so memory stays O(n^2) regardless of the dimension.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NumericError, ParameterError
from .kernels import median_heuristic, rbf_gram

DEFAULT_RIDGE = 1e-3


@dataclass(frozen=True)
class ScoreEstimate:
    score: np.ndarray
    jac_diag: np.ndarray | None
    bandwidth: float
    ridge: float


class _SteinSystem:
    """Kernel quantities shared by all estimators for one sample matrix."""

    def __init__(self, x: np.ndarray, ridge: float, bandwidth: float | None):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ParameterError(f"expected an n x d matrix, got shape {x.shape}")
        n = x.shape[0]
        if n < 10:
            raise ParameterError(f"Stein estimation needs at least 10 samples, got {n}")
        if not ridge > 0:
            raise ParameterError(f"ridge must be positive, got {ridge}")
        self.x = x
        self.n = n
        self.ridge = ridge
        self.s = median_heuristic(x) if bandwidth is None else float(bandwidth)
        self.k = rbf_gram(x, x, self.s)
        self.r = self.k.sum(axis=1)
        self.kx = self.k @ x
        reg = self.k.copy()
        reg[np.diag_indices_from(reg)] += ridge * n
        try:
            self._chol = linalg.cho_factor(reg, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericError(f"regularized Gram matrix is not positive definite: {exc}") from None
        self._g: np.ndarray | None = None

    def solve(self, b: np.ndarray) -> np.ndarray:
        out = linalg.cho_solve(self._chol, b, check_finite=False)
        if not np.all(np.isfinite(out)):
            raise NumericError("Stein solve produced non-finite values")
        return out

    @property
    def score(self) -> np.ndarray:
        if self._g is None:
            a1 = (self.x * self.r[:, None] - self.kx) / self.s**2
            self._g = -self.solve(a1)
        return self._g

    def jac_diag(self) -> np.ndarray:
        s2 = self.s**2
        x = self.x
        kx2 = self.k @ (x * x)
        a2 = -self.r[:, None] / s2 + (kx2 - 2 * x * self.kx + x * x * self.r[:, None]) / s2**2
        g = self.score
        return -(g * g) + self.solve(a2)

    def jac_column(self, c: int) -> np.ndarray:
        """Row ``c`` of the Jacobian for every sample: ``J[:, c, j]`` over all ``j``."""
        s2 = self.s**2
        x = self.x
        xc = x[:, [c]]
        a2 = (self.k @ (xc * x) - xc * self.kx - x * self.kx[:, [c]] + xc * x * self.r[:, None]) / s2**2
        a2[:, c] -= self.r / s2
        g = self.score
        return -(g[:, [c]] * g) + self.solve(a2)


def estimate_score(x: np.ndarray, ridge: float = DEFAULT_RIDGE,
                   bandwidth: float | None = None) -> ScoreEstimate:
    sys = _SteinSystem(x, ridge, bandwidth)
    return ScoreEstimate(sys.score, None, sys.s, ridge)


def estimate_jacobian_diag(x: np.ndarray, ridge: float = DEFAULT_RIDGE,
                           bandwidth: float | None = None) -> ScoreEstimate:
    """Score and per-sample diagonal of its Jacobian, ``d s_i / d x_i``."""
    sys = _SteinSystem(x, ridge, bandwidth)
    return ScoreEstimate(sys.score, sys.jac_diag(), sys.s, ridge)


def jacobian_offdiag_column(x: np.ndarray, leaf: int, ridge: float = DEFAULT_RIDGE,
                            bandwidth: float | None = None) -> np.ndarray:
    """Per-sample ``d s_leaf / d x_j`` for every ``j != leaf`` (column order kept)."""
    x = np.asarray(x, dtype=float)
    if not 0 <= leaf < x.shape[1]:
        raise ParameterError(f"leaf index {leaf} out of range for {x.shape[1]} columns")
    sys = _SteinSystem(x, ridge, bandwidth)
    row = sys.jac_column(leaf)
    return np.delete(row, leaf, axis=1)
