"""Synthetic benchmark for score-based causal discovery under model misspecification."""
from .discovery import (
    CandidateParents,
    DiscoveryConfig,
    das_candidates,
    nogam_order,
    random_baseline,
    resit_order,
    score_order,
    scoresort_order,
)
from .graphs import CausalOrder, Dag, GraphConfig, sample_graph
from .metrics import Confusion, bsf, confusion, f1, fnr_fpr, fnr_order, metric_dict
from .pruning import PruneConfig, cam_prune, pns, prune_from_candidates
from .scm import Dataset, NoiseSpec, ScenarioSpec, generate, standardize
from .stein import estimate_jacobian_diag, estimate_score

__version__ = "0.1.0"

__all__ = [
    "CandidateParents", "CausalOrder", "Confusion", "Dag", "Dataset", "DiscoveryConfig", "GraphConfig",
    "NoiseSpec", "PruneConfig", "ScenarioSpec", "bsf", "cam_prune", "confusion", "das_candidates",
    "estimate_jacobian_diag", "estimate_score", "f1", "fnr_fpr", "fnr_order", "generate", "metric_dict",
    "nogam_order", "pns", "prune_from_candidates", "random_baseline", "resit_order", "sample_graph",
    "score_order", "scoresort_order", "standardize",
]
