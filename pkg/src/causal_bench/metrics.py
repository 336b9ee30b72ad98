"""Edge-level confusion counts, F1, rates, order violations and the balanced score.

Counting rules (skeleton-based, with direction errors charged separately):

* TP: predicted skeleton edges that are also truth skeleton edges
* FP: predicted skeleton edges absent from the truth skeleton
* FN: truth skeleton edges missing from the prediction, plus every predicted
  edge whose direction is reversed relative to the truth
* TN: unordered pairs non-adjacent in both skeletons

A reversed edge therefore counts once as TP and once as FN.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError, UndefinedMetricError
from .graphs import CausalOrder, Dag


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int
    a: int
    i_count: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn, self.a, self.i_count) < 0:
            raise ParameterError("confusion counts must be nonnegative")


def _upper(m: np.ndarray) -> np.ndarray:
    return m[np.triu_indices(m.shape[0], k=1)]


def confusion(pred: Dag, truth: Dag) -> Confusion:
    if pred.d != truth.d:
        raise ParameterError(f"dimension mismatch: prediction has {pred.d} nodes, truth has {truth.d}")
    p, t = pred.adj, truth.adj
    ps = _upper(p | p.T)
    ts = _upper(t | t.T)
    reversed_edges = int(np.sum(p & t.T))
    tp = int(np.sum(ps & ts))
    fp = int(np.sum(ps & ~ts))
    fn = int(np.sum(~ps & ts)) + reversed_edges
    tn = int(np.sum(~ps & ~ts))
    a = truth.n_edges
    return Confusion(tp, fp, fn, tn, a, truth.d * (truth.d - 1) // 2 - a)


def f1(c: Confusion) -> float:
    denom = c.tp + 0.5 * (c.fn + c.fp)
    return 1.0 if denom == 0 else c.tp / denom


def fnr_fpr(c: Confusion) -> tuple[float, float]:
    fnr = c.fn / (c.tp + c.fn) if c.tp + c.fn else 0.0
    fpr = c.fp / (c.fp + c.tn) if c.fp + c.tn else 0.0
    return fnr, fpr


def fnr_order(order: CausalOrder, truth: Dag) -> float:
    """Fraction of truth edges ``i -> j`` placed with ``j`` before ``i``."""
    if len(order) != truth.d:
        raise ParameterError(f"dimension mismatch: order has {len(order)} nodes, truth has {truth.d}")
    edges = truth.edges()
    if not edges:
        return 0.0
    pos = order.positions()
    return float(sum(pos[j] < pos[i] for i, j in edges) / len(edges))


def bsf(c: Confusion) -> float:
    if c.a == 0 or c.i_count == 0:
        raise UndefinedMetricError(
            f"balanced score needs at least one arc and one independency (a={c.a}, i={c.i_count})")
    return 0.5 * (c.tp / c.a + c.tn / c.i_count - c.fp / c.i_count - c.fn / c.a)


def metric_dict(pred: Dag, truth: Dag, order: CausalOrder | None = None) -> dict[str, float | int | None]:
    """Flat metric bundle; ``fnr_order`` only when an order is supplied, ``bsf`` None when undefined."""
    c = confusion(pred, truth)
    fnr, fpr = fnr_fpr(c)
    try:
        b: float | None = bsf(c)
    except UndefinedMetricError:
        b = None
    out: dict[str, float | int | None] = {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
                                          "f1": f1(c), "fnr": fnr, "fpr": fpr}
    if order is not None:
        out["fnr_order"] = fnr_order(order, truth)
    out["bsf"] = b
    return out


def as_dict(c: Confusion) -> dict[str, int]:
    return asdict(c)
