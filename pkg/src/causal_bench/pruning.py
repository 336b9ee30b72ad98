"""Additive-model edge pruning given a causal order.

Each node is regressed on its candidate parents with one natural cubic
spline block per covariate; a parent is kept when the F-test for dropping its
block rejects at level ``alpha``. The p-values are computed once and then
thresholded, so edge sets are nested in ``alpha`` by construction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .discovery import CandidateParents
from .errors import ParameterError
from .graphs import CausalOrder, Dag
from .kernels import _as_2d

ALPHA_GRID = (0.001, 0.01, 0.05, 0.1)


@dataclass(frozen=True)
class PruneConfig:
    alpha: float = 0.05
    pns_k: int = 20
    pns_threshold_nodes: int = 20
    basis_size: int = 10
    pns_ridge: float = 1e-3

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.pns_k < 1:
            raise ParameterError(f"pns_k must be >= 1, got {self.pns_k}")
        if self.basis_size < 1:
            raise ParameterError(f"basis_size must be >= 1, got {self.basis_size}")


class RankDeficiencyWarning(UserWarning):
    pass


def spline_basis(v: np.ndarray, size: int) -> np.ndarray:
    """Natural cubic spline basis without intercept, at most ``size`` columns.

    Uses ``size + 1`` knots at empirical quantiles (duplicates merged), giving
    a linear term plus ``knots - 2`` truncated-power terms that are linear
    beyond the boundary knots.
    """
    v = np.asarray(v, dtype=float)
    sd = v.std()
    z = (v - v.mean()) / sd if sd > 0 else v - v.mean()
    if size == 1:
        return z[:, None]
    knots = np.unique(np.quantile(z, np.linspace(0, 1, size + 1)))
    if knots.size < 3:
        return z[:, None]

    def dk(k: int) -> np.ndarray:
        return (np.maximum(z - knots[k], 0) ** 3 - np.maximum(z - knots[-1], 0) ** 3) / (knots[-1] - knots[k])

    last = dk(knots.size - 2)
    cols = [z] + [dk(k) - last for k in range(knots.size - 2)]
    return np.column_stack(cols)


def _rss(design: np.ndarray, y: np.ndarray) -> float:
    coef, *_ = linalg.lstsq(design, y, check_finite=False)
    r = y - design @ coef
    return float(r @ r)


def _drop_dependent(blocks: dict[int, np.ndarray], n: int, node: int) -> dict[int, np.ndarray]:
    """Greedily drop covariates whose block adds no rank to the design."""
    kept: dict[int, np.ndarray] = {}
    design = np.ones((n, 1))
    for j, b in blocks.items():
        trial = np.column_stack([design, b])
        if np.linalg.matrix_rank(trial) < trial.shape[1]:
            warnings.warn(f"node {node}: covariate {j} is rank deficient in the additive design; dropped",
                          RankDeficiencyWarning, stacklevel=3)
            continue
        kept[j] = b
        design = trial
    return kept


def _block_pvalues(x: np.ndarray, node: int, parents: list[int], size: int) -> dict[int, float]:
    n = x.shape[0]
    y = x[:, node] - x[:, node].mean()
    blocks = _drop_dependent({j: spline_basis(x[:, j], size) for j in parents}, n, node)
    if not blocks:
        return {}
    full = np.column_stack([np.ones(n)] + list(blocks.values()))
    df_res = n - full.shape[1]
    if df_res <= 0:
        raise ParameterError(f"node {node}: {full.shape[1]} design columns need more than {n} samples")
    rss_full = _rss(full, y)
    out = {}
    for j in blocks:
        reduced = np.column_stack([np.ones(n)] + [b for k, b in blocks.items() if k != j])
        q = blocks[j].shape[1]
        num = max(_rss(reduced, y) - rss_full, 0.0) / q
        den = rss_full / df_res
        if den <= 0:
            out[j] = 0.0 if num > 0 else 1.0
        else:
            out[j] = float(stats.f.sf(num / den, q, df_res))
    return out


def _max_covariates(n: int, size: int) -> int:
    # residual degrees of freedom must stay positive: n > 1 + size * m
    return max((n - 2) // size, 0)


def _pns_rank(x: np.ndarray, node: int, preds: list[int], size: int, ridge: float) -> list[int]:
    """Predecessors sorted by decreasing spread of their fitted additive component."""
    if len(preds) <= 1:
        return list(preds)
    n = x.shape[0]
    y = x[:, node] - x[:, node].mean()
    blocks = [spline_basis(x[:, j], size) for j in preds]
    blocks = [b - b.mean(axis=0) for b in blocks]
    design = np.column_stack(blocks)
    gram = design.T @ design / n
    gram[np.diag_indices_from(gram)] += ridge
    coef = linalg.solve(gram, design.T @ y / n, assume_a="pos", check_finite=False)
    importance = []
    start = 0
    for b in blocks:
        stop = start + b.shape[1]
        importance.append(float(np.std(b @ coef[start:stop])))
        start = stop
    ranked = sorted(range(len(preds)), key=lambda k: (-importance[k], preds[k]))
    return [preds[k] for k in ranked]


def pns(x: np.ndarray, order: CausalOrder, k: int, cfg: PruneConfig = PruneConfig()) -> CandidateParents:
    """Keep, for every node, its ``k`` most important order-predecessors."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    x = _as_2d(x)
    full = CandidateParents.all_predecessors(order)
    sets = []
    for node, preds in enumerate(full.sets):
        ranked = _pns_rank(x, node, sorted(preds), cfg.basis_size, cfg.pns_ridge)
        sets.append(frozenset(ranked[:k]))
    return CandidateParents(tuple(sets))


def prune_pvalues(x: np.ndarray, order: CausalOrder, candidates: CandidateParents | None = None,
                  cfg: PruneConfig = PruneConfig()) -> np.ndarray:
    """Matrix ``p[j, i]`` of block F-test p-values for edge ``j -> i`` (NaN where untested)."""
    x = _as_2d(x)
    d = x.shape[1]
    if len(order) != d:
        raise ParameterError(f"order has {len(order)} nodes but data has {d} columns")
    if candidates is None:
        candidates = CandidateParents.all_predecessors(order)
    if len(candidates.sets) != d:
        raise ParameterError("candidate sets do not match the number of columns")
    if not candidates.respects(order):
        raise ParameterError("candidate parents must precede their child in the order")
    n = x.shape[0]
    cap = _max_covariates(n, cfg.basis_size)
    use_pns = d > cfg.pns_threshold_nodes
    pvals = np.full((d, d), np.nan)
    for node in range(d):
        preds = sorted(candidates.sets[node])
        if not preds:
            continue
        limit = min(cfg.pns_k, cap) if use_pns else cap
        if len(preds) > limit:
            preds = _pns_rank(x, node, preds, cfg.basis_size, cfg.pns_ridge)[:limit]
        for j, p in _block_pvalues(x, node, sorted(preds), cfg.basis_size).items():
            pvals[j, node] = p
    return pvals


def threshold_pvalues(pvals: np.ndarray, alpha: float) -> Dag:
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    with np.errstate(invalid="ignore"):
        adj = np.nan_to_num(pvals, nan=1.0) < alpha
    return Dag(adj)


def cam_prune(x: np.ndarray, order: CausalOrder, cfg: PruneConfig = PruneConfig()) -> Dag:
    return threshold_pvalues(prune_pvalues(x, order, None, cfg), cfg.alpha)


def prune_from_candidates(x: np.ndarray, order: CausalOrder, candidates: CandidateParents,
                          cfg: PruneConfig = PruneConfig()) -> Dag:
    return threshold_pvalues(prune_pvalues(x, order, candidates, cfg), cfg.alpha)
