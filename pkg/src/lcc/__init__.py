"""Latent cluster correction: cluster latent representations, match clusters
to labels, and compute correction targets, loss, and gradient."""

from .assignment import (Assignment, OverlapMatrix, assignment_objective,
                         exhaustive_assignment_oracle, optimal_assignment,
                         overlap_matrix)
from .community import (KERNEL_IMPLEMENTATION, CommunityConfig, Partition,
                        PressureState, conductance_clustering, conductance_set,
                        knn_pressure, leiden_refine, louvain, modularity)
from .correction import (CorrectionPlan, LossReport, SubsetMetrics,
                         approximate_targets, classify_samples, clustering_loss,
                         clustering_loss_grad, correction_targets, load_plan,
                         orthogonalize_targets, save_plan, subset_metrics)
from .dataset import (BlobSpec, LatentDataset, generate_blobs, load_dataset,
                      save_dataset)
from .errors import FormatError, LccError, ParameterError, ValidationError
from .knn import KnnGraph, build_knn_graph, median_heuristic_beta, rbf_weight
from .pipeline import PipelineConfig, PipelineReport, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "Assignment", "OverlapMatrix", "assignment_objective",
    "exhaustive_assignment_oracle", "optimal_assignment", "overlap_matrix",
    "KERNEL_IMPLEMENTATION", "CommunityConfig", "Partition", "PressureState",
    "conductance_clustering", "conductance_set", "knn_pressure",
    "leiden_refine", "louvain", "modularity",
    "CorrectionPlan", "LossReport", "SubsetMetrics", "approximate_targets",
    "classify_samples", "clustering_loss", "clustering_loss_grad",
    "correction_targets", "load_plan", "orthogonalize_targets", "save_plan",
    "subset_metrics",
    "BlobSpec", "LatentDataset", "generate_blobs", "load_dataset", "save_dataset",
    "FormatError", "LccError", "ParameterError", "ValidationError",
    "KnnGraph", "build_knn_graph", "median_heuristic_beta", "rbf_weight",
    "PipelineConfig", "PipelineReport", "run_pipeline",
]
