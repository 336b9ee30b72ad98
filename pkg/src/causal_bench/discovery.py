"""Topological ordering methods and score-Jacobian candidate-parent selection.

All ordering methods peel one leaf at a time and re-estimate on the remaining
columns after every removal. Ties in any argmin go to the smallest node index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ParameterError
from .graphs import CausalOrder, Dag
from .kernels import (
    _as_2d,
    krr_fit,
    krr_oof_predict,
    krr_predict,
    median_heuristic,
    rbf_gram,
)
from .seeding import child_rng
from .stein import _SteinSystem, estimate_jacobian_diag, estimate_score


@dataclass(frozen=True)
class DiscoveryConfig:
    stein_ridge: float = 1e-3
    stein_bandwidth: float | None = None
    # kernel ridge penalty for residual and score regressions
    regression_ridge: float = 0.1
    folds: int = 5
    das_margin: float = 1.0


DEFAULT_CONFIG = DiscoveryConfig()


@dataclass(frozen=True)
class CandidateParents:
    sets: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sets", tuple(frozenset(int(j) for j in s) for s in self.sets))

    @classmethod
    def all_predecessors(cls, order: CausalOrder) -> "CandidateParents":
        sets = [frozenset()] * len(order)
        for k, node in enumerate(order.perm):
            sets[node] = frozenset(order.perm[:k])
        return cls(tuple(sets))

    @classmethod
    def empty(cls, d: int) -> "CandidateParents":
        return cls(tuple(frozenset() for _ in range(d)))

    def respects(self, order: CausalOrder) -> bool:
        pos = order.positions()
        return all(pos[j] < pos[i] for i, s in enumerate(self.sets) for j in s)


def _check_x(x: np.ndarray, min_rows: int) -> np.ndarray:
    x = _as_2d(x)
    if x.shape[0] < min_rows:
        raise ParameterError(f"need at least {min_rows} samples, got {x.shape[0]}")
    return x


def _peel(x: np.ndarray, leaf_criterion) -> CausalOrder:
    """Generic leaf-peeling loop; ``leaf_criterion`` maps a sub-matrix to one value per column."""
    remaining = list(range(x.shape[1]))
    leaves = []
    while len(remaining) > 1:
        crit = np.asarray(leaf_criterion(x[:, remaining]), dtype=float)
        idx = int(np.argmin(crit))  # first minimum == smallest node index, as remaining is sorted
        leaves.append(remaining.pop(idx))
    leaves.append(remaining[0])
    return CausalOrder(tuple(reversed(leaves)))


def scoresort_order(x: np.ndarray, config: DiscoveryConfig = DEFAULT_CONFIG) -> CausalOrder:
    """Leaf = column with the smallest variance of its estimated score entry."""
    x = _check_x(x, 10)

    def crit(sub):
        return estimate_score(sub, config.stein_ridge, config.stein_bandwidth).score.var(axis=0)

    return _peel(x, crit)


def score_order(x: np.ndarray, config: DiscoveryConfig = DEFAULT_CONFIG) -> CausalOrder:
    """Leaf = column with the smallest variance of the score-Jacobian diagonal."""
    x = _check_x(x, 10)

    def crit(sub):
        return estimate_jacobian_diag(sub, config.stein_ridge, config.stein_bandwidth).jac_diag.var(axis=0)

    return _peel(x, crit)


def nogam_order(x: np.ndarray, folds: int | None = None,
                config: DiscoveryConfig = DEFAULT_CONFIG) -> CausalOrder:
    """Leaf = column whose score entry is best predicted from its own regression residual.

    Residuals ``R_i = X_i - E[X_i | rest]`` are out-of-fold kernel ridge
    predictions; the criterion is the cross-validated MSE of a 1-D kernel
    ridge fit of the score entry on ``R_i``.
    """
    folds = config.folds if folds is None else folds
    if folds < 2:
        raise ParameterError(f"folds must be >= 2, got {folds}")
    x = _check_x(x, max(10, 2 * folds))
    ridge = config.regression_ridge

    def crit(sub):
        score = estimate_score(sub, config.stein_ridge, config.stein_bandwidth).score
        mse = np.empty(sub.shape[1])
        for i in range(sub.shape[1]):
            others = np.delete(sub, i, axis=1)
            resid = sub[:, i] - krr_oof_predict(others, sub[:, i], folds, ridge)
            pred = krr_oof_predict(resid, score[:, i], folds, ridge)
            mse[i] = np.mean((score[:, i] - pred) ** 2)
        return mse

    return _peel(x, crit)


def _centered(k: np.ndarray) -> np.ndarray:
    kc = k - k.mean(axis=0, keepdims=True)
    return kc - kc.mean(axis=1, keepdims=True)


def resit_order(x: np.ndarray, config: DiscoveryConfig = DEFAULT_CONFIG) -> CausalOrder:
    """Leaf = column whose regression residual is least dependent (max HSIC) on the others."""
    x = _check_x(x, 50)
    m = x.shape[0]
    ridge = config.regression_ridge

    def crit(sub):
        grams = [_centered(rbf_gram(sub[:, [j]], None, median_heuristic(sub[:, j]))) for j in range(sub.shape[1])]
        worst = np.empty(sub.shape[1])
        for i in range(sub.shape[1]):
            others = np.delete(sub, i, axis=1)
            model = krr_fit(others, sub[:, i], None, ridge)
            resid = sub[:, i] - krr_predict(model, others)
            if np.allclose(resid, resid[0]):
                worst[i] = 0.0
                continue
            lc = _centered(rbf_gram(resid[:, None], None, median_heuristic(resid)))
            worst[i] = max(float(np.sum(grams[j] * lc)) / m**2 for j in range(sub.shape[1]) if j != i)
        return worst

    return _peel(x, crit)


def das_statistics(x: np.ndarray, order: CausalOrder,
                   config: DiscoveryConfig = DEFAULT_CONFIG) -> dict[int, dict[int, float]]:
    """One-sided p-values ``p[leaf][j]`` that ``E|d s_leaf / d x_j|`` exceeds the null floor.

    Columns are standardized first (whether a partial derivative vanishes is
    scale free). The null floor is measured on a decoy column, a fixed
    permutation of the leaf's own values appended to the data, which is
    independent of everything by construction. The hypothesis is
    ``mean|J_lj| > (1 + das_margin) * mean|J_l,decoy|``, tested with a
    z statistic on the per-sample absolute values.
    """
    x = _check_x(x, 10)
    xs = x / x.std(axis=0)
    perm = list(order.perm)
    out: dict[int, dict[int, float]] = {}
    factor = 1.0 + config.das_margin
    n = xs.shape[0]
    for p in range(len(perm) - 1, 0, -1):
        leaf = perm[p]
        preds = perm[:p]
        cols = preds + [leaf]
        decoy = xs[child_rng(0, "das_decoy", leaf, p).permutation(n), leaf]
        sub = np.column_stack([xs[:, cols], decoy])
        sys = _SteinSystem(sub, config.stein_ridge, config.stein_bandwidth)
        a = np.abs(sys.jac_column(len(preds)))
        m_null = a[:, -1].mean()
        se_null = a[:, -1].std(ddof=1) / math.sqrt(n)
        out[leaf] = {}
        for c, j in enumerate(preds):
            m_j = a[:, c].mean()
            se_j = a[:, c].std(ddof=1) / math.sqrt(n)
            z = (m_j - factor * m_null) / math.sqrt(se_j**2 + (factor * se_null) ** 2 + 1e-300)
            out[leaf][j] = float(stats.norm.sf(z))
    return out


def das_candidates(x: np.ndarray, order: CausalOrder, significance: float = 0.05,
                   config: DiscoveryConfig = DEFAULT_CONFIG) -> CandidateParents:
    """Predecessors passing the Jacobian test at ``significance`` (Bonferroni per leaf)."""
    if not 0 < significance < 1:
        raise ParameterError(f"significance must lie in (0, 1), got {significance}")
    pvals = das_statistics(x, order, config)
    sets = [set() for _ in range(len(order))]
    for leaf, pj in pvals.items():
        if not pj:
            continue
        thr = significance / len(pj)
        sets[leaf] = {j for j, p in pj.items() if p < thr}
    return CandidateParents(tuple(frozenset(s) for s in sets))


def random_baseline(d: int, rng: np.random.Generator) -> tuple[CausalOrder, Dag]:
    """Uniform random order; each admitted edge kept with probability 1/2."""
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    order = CausalOrder(tuple(int(i) for i in rng.permutation(d)))
    full = order.full_dag().adj
    keep = rng.random((d, d)) < 0.5
    return order, Dag(full & keep)


ORDER_METHODS = {
    "scoresort": scoresort_order,
    "score": score_order,
    "nogam": nogam_order,
    "resit": resit_order,
    "das": score_order,
}
