"""Importance-filtered cross-domain adaptation (closed-set and open-set)."""

from ._core import (
    IfcdaError,
    SimilarityGraph,
    build_graph,
    build_subspace_regularizer,
    collapse_shared_novel,
    column_normalize,
    compute_metrics,
    embed,
    filter_label,
    make_synthetic,
    mmd_classwise,
    mmd_shared,
    predict_hard,
    propagate,
    run_experiment,
    run_ifcda,
    scatter_matrices,
    to_one_hot,
)

__all__ = [
    "IfcdaError",
    "SimilarityGraph",
    "build_graph",
    "build_subspace_regularizer",
    "collapse_shared_novel",
    "column_normalize",
    "compute_metrics",
    "embed",
    "filter_label",
    "make_synthetic",
    "mmd_classwise",
    "mmd_shared",
    "predict_hard",
    "propagate",
    "run_experiment",
    "run_ifcda",
    "scatter_matrices",
    "to_one_hot",
]
