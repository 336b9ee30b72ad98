"""Kernel primitives shared by the score estimator and the ordering methods."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats
from scipy.spatial.distance import cdist, pdist

from .errors import DegenerateInputError, NumericError, ParameterError

MEDIAN_SUBSAMPLE = 1000
DEFAULT_RIDGE = 1e-3


def _as_2d(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def sq_dists(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    a = _as_2d(a)
    b = a if b is None else _as_2d(b)
    return cdist(a, b, "sqeuclidean")


def rbf_gram(a: np.ndarray, b: np.ndarray | None = None, bandwidth: float = 1.0) -> np.ndarray:
    """``exp(-|a_r - b_s|^2 / (2 bandwidth^2))``."""
    if not bandwidth > 0:
        raise ParameterError(f"bandwidth must be positive, got {bandwidth}")
    if np.isinf(bandwidth):
        a2 = _as_2d(a)
        return np.ones((a2.shape[0], a2.shape[0] if b is None else _as_2d(b).shape[0]))
    return np.exp(-sq_dists(a, b) / (2.0 * bandwidth**2))


def median_heuristic(x: np.ndarray, max_rows: int = MEDIAN_SUBSAMPLE) -> float:
    """Median pairwise Euclidean distance over at most ``max_rows`` evenly spaced rows.

    Falls back to the smallest positive distance when more than half of the
    pairs coincide.
    """
    x = _as_2d(x)
    if x.shape[0] < 2:
        raise ParameterError("median heuristic needs at least two rows")
    if x.shape[0] > max_rows:
        # evenly spaced rows keep the rule deterministic
        idx = np.linspace(0, x.shape[0] - 1, max_rows).astype(int)
        x = x[idx]
    dist = pdist(x)
    med = float(np.median(dist))
    if med > 0:
        return med
    pos = dist[dist > 0]
    if pos.size == 0:
        raise DegenerateInputError("all rows are identical; no kernel bandwidth can be chosen")
    return float(pos.min())


def solve_psd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive definite ``a``."""
    try:
        c = linalg.cho_factor(a, lower=True, check_finite=False)
        out = linalg.cho_solve(c, b, check_finite=False)
    except linalg.LinAlgError:
        try:
            out = linalg.solve(a, b, assume_a="sym", check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericError(f"linear solve failed: {exc}") from None
    if not np.all(np.isfinite(out)):
        raise NumericError("linear solve produced non-finite values")
    return out


@dataclass(frozen=True)
class KernelRidgeModel:
    train_inputs: np.ndarray
    dual_coefficients: np.ndarray
    bandwidth: float
    ridge: float
    intercept: float = 0.0

    def predict(self, x: np.ndarray) -> np.ndarray:
        return krr_predict(self, x)


def krr_fit(x: np.ndarray, y: np.ndarray, bandwidth: float | None = None,
            ridge: float = DEFAULT_RIDGE) -> KernelRidgeModel:
    """Kernel ridge regression with an unpenalized intercept.

    The intercept is ``mean(y)`` and ``c`` solves ``(K + ridge I) c = y - mean(y)``,
    so constant targets are reproduced exactly. ``bandwidth=None`` picks the
    median heuristic of ``x``.
    """
    if not ridge > 0:
        raise ParameterError(f"ridge must be positive, got {ridge}")
    x = _as_2d(x)
    y = np.asarray(y, dtype=float)
    if bandwidth is None:
        bandwidth = median_heuristic(x)
    k = rbf_gram(x, x, bandwidth)
    k[np.diag_indices_from(k)] += ridge
    b = float(y.mean())
    c = solve_psd(k, y - b)
    return KernelRidgeModel(x.copy(), c, float(bandwidth), float(ridge), b)


def krr_predict(model: KernelRidgeModel, x: np.ndarray) -> np.ndarray:
    return rbf_gram(_as_2d(x), model.train_inputs, model.bandwidth) @ model.dual_coefficients + model.intercept


def kfold_indices(n: int, folds: int) -> list[np.ndarray]:
    """Contiguous, deterministic folds (rows are exchangeable for iid data)."""
    if folds < 2:
        raise ParameterError(f"folds must be >= 2, got {folds}")
    return [f for f in np.array_split(np.arange(n), folds) if f.size]


def krr_oof_predict(x: np.ndarray, y: np.ndarray, folds: int, ridge: float,
                    bandwidth: float | None = None) -> np.ndarray:
    """Out-of-fold kernel ridge predictions of ``y`` from ``x``."""
    x = _as_2d(x)
    y = np.asarray(y, dtype=float)
    if bandwidth is None:
        bandwidth = median_heuristic(x)
    pred = np.empty_like(y)
    for test in kfold_indices(len(y), folds):
        train = np.setdiff1d(np.arange(len(y)), test, assume_unique=True)
        model = krr_fit(x[train], y[train], bandwidth, ridge)
        pred[test] = krr_predict(model, x[test])
    return pred


@dataclass(frozen=True)
class HsicResult:
    statistic: float
    p_value: float


def _centered_gram(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = _as_2d(v)
    if np.all(v == v[0]):
        raise DegenerateInputError("HSIC input is constant")
    k = rbf_gram(v, v, median_heuristic(v))
    kc = k - k.mean(axis=0, keepdims=True)
    kc = kc - kc.mean(axis=1, keepdims=True)
    return k, kc


def hsic_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """Biased HSIC V-statistic ``trace(Kc Lc) / m^2``."""
    _, kc = _centered_gram(x)
    _, lc = _centered_gram(y)
    return max(float(np.sum(kc * lc)) / kc.shape[0] ** 2, 0.0)


def hsic_test(x: np.ndarray, y: np.ndarray, rng: np.random.Generator | None = None,
              permutations: int = 0) -> HsicResult:
    """HSIC independence test with a gamma approximation of the null.

    ``permutations > 0`` replaces the gamma approximation with a permutation
    p-value; only that path consumes ``rng``.
    """
    x = _as_2d(x)
    y = _as_2d(y)
    m = x.shape[0]
    if m < 20:
        raise ParameterError(f"HSIC test needs at least 20 samples, got {m}")
    if y.shape[0] != m:
        raise ParameterError("x and y must have the same number of rows")
    k, kc = _centered_gram(x)
    l, lc = _centered_gram(y)
    stat = max(float(np.sum(kc * lc)) / m**2, 0.0)

    if permutations > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        exceed = 0
        for _ in range(permutations):
            p = rng.permutation(m)
            exceed += float(np.sum(kc * lc[np.ix_(p, p)])) / m**2 >= stat
        return HsicResult(stat, (exceed + 1) / (permutations + 1))

    # Gamma moments of the null distribution of m * HSIC_b (Gretton et al. 2008)
    var = (kc * lc / 6.0) ** 2
    var = (var.sum() - np.trace(var)) / m / (m - 1)
    var = var * 72.0 * (m - 4) * (m - 5) / m / (m - 1) / (m - 2) / (m - 3)
    k0 = k - np.diag(np.diag(k))
    l0 = l - np.diag(np.diag(l))
    mu_x = k0.sum() / m / (m - 1)
    mu_y = l0.sum() / m / (m - 1)
    mean = (1.0 + mu_x * mu_y - mu_x - mu_y) / m
    if var <= 0 or mean <= 0:
        return HsicResult(stat, 1.0)
    shape = mean**2 / var
    scale = var * m / mean
    p = float(stats.gamma.sf(stat * m, shape, scale=scale))
    return HsicResult(stat, min(max(p, 0.0), 1.0))
