"""End-to-end per-epoch procedure: dataset file in, correction plan out.

Stages: load -> k-NN graph -> clustering -> cluster/label assignment ->
CC/MC classification -> correction targets -> loss (and gradient on
request). Each stage's wall time is reported; outputs are byte-identical
for identical config and seed.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import community, correction
from .assignment import optimal_assignment, overlap_matrix
from .community import CommunityConfig
from .correction import classify_samples, clustering_loss, clustering_loss_grad
from .dataset import LatentDataset, load_dataset, save_dataset
from .errors import LccError, ParameterError
from .knn import build_knn_graph

CLUSTER_MODES = ("louvain", "leiden", "pressure")
LOSS_MODES = ("exact", "approximate")


@dataclass
class PipelineConfig:
    input: str
    k: int = 5
    beta: object = 1.0  # positive real or "median"
    cluster_mode: str = "leiden"
    loss_mode: str = "exact"
    orthogonal: bool = False
    k_prime: int = 50
    variance_fraction: float = 0.95
    seed: int = 0
    emit_gradient: bool = False
    plan_out: Optional[str] = None
    gradient_out: Optional[str] = None
    report_out: Optional[str] = None
    input_format: str = "binary"
    w: float = 1e-4  # pass-through metadata for the external trainer

    def validate(self) -> None:
        if self.k < 1:
            raise ParameterError("k must be a positive integer")
        if self.cluster_mode not in CLUSTER_MODES:
            raise ParameterError("cluster_mode must be one of %s" % (CLUSTER_MODES,))
        if self.loss_mode not in LOSS_MODES:
            raise ParameterError("loss_mode must be one of %s" % (LOSS_MODES,))
        if self.orthogonal and self.loss_mode != "exact":
            raise ParameterError("orthogonal correction requires the exact loss mode")
        if self.k_prime < 2:
            raise ParameterError("k_prime must be >= 2")
        if not (0.0 < self.variance_fraction <= 1.0):
            raise ParameterError("variance_fraction must be in (0, 1]")
        if self.beta != "median" and not float(self.beta) > 0:
            raise ParameterError("beta must be positive or 'median'")


@dataclass
class PipelineReport:
    n_samples: int
    dim: int
    n_clusters: int
    modularity: float
    conductance: float
    assignment_objective: int
    n_cc: int
    n_mc: int
    n_corr: int
    loss: float
    cluster_mode: str
    loss_mode: str
    w: float
    timings_ms: Dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "dim": self.dim,
            "n_clusters": self.n_clusters,
            "modularity": self.modularity,
            "conductance": self.conductance,
            "assignment_objective": self.assignment_objective,
            "n_cc": self.n_cc,
            "n_mc": self.n_mc,
            "n_corr": self.n_corr,
            "loss": self.loss,
            "cluster_mode": self.cluster_mode,
            "loss_mode": self.loss_mode,
            "w": self.w,
            "timings_ms": self.timings_ms,
        }


@contextmanager
def _stage(name: str, timings: Dict[str, float]):
    start = time.perf_counter()
    try:
        yield
    except LccError as exc:
        raise type(exc)("[%s] %s" % (name, exc)) from exc
    finally:
        timings[name] = (time.perf_counter() - start) * 1000.0


def run_pipeline(config: PipelineConfig,
                 dataset: Optional[LatentDataset] = None) -> PipelineReport:
    """Execute the full procedure; ``dataset`` overrides loading from disk."""
    config.validate()
    timings: Dict[str, float] = {}

    with _stage("load", timings):
        if dataset is None:
            dataset = load_dataset(config.input, format=config.input_format)
    Z = dataset.z64()
    n, d = Z.shape

    with _stage("knn", timings):
        if config.k >= n:
            raise ParameterError("k=%d must be < N=%d" % (config.k, n))
        graph = build_knn_graph(Z, config.k, beta=config.beta)

    with _stage("cluster", timings):
        info: dict = {}
        if config.cluster_mode == "pressure":
            partition, _state = community.knn_pressure(graph, seed=config.seed)
            info["passes"] = len(_state.conductance_history)
        else:
            cc = CommunityConfig(mode=config.cluster_mode, seed=config.seed)
            partition = community.louvain(graph, cc, info=info)
        q = community.modularity(graph, partition)
        phi = community.conductance_clustering(graph, partition)

    with _stage("assign", timings):
        overlap = overlap_matrix(dataset.y, partition)
        assignment = optimal_assignment(overlap)
        is_cc = classify_samples(dataset.y, partition, assignment)

    with _stage("targets", timings):
        if config.loss_mode == "exact":
            plan = correction.correction_targets(Z, dataset.y, is_cc, config.k)
            if config.orthogonal:
                plan = correction.orthogonalize_targets(
                    Z, partition, plan, config.k_prime, config.variance_fraction)
        else:
            plan = correction.approximate_targets(
                Z, dataset.y, partition, assignment, is_cc, seed=config.seed)
        plan = plan.quantized()

    with _stage("loss", timings):
        report_loss = clustering_loss(Z, plan)
        gradient = clustering_loss_grad(Z, plan) if config.emit_gradient else None

    with _stage("write", timings):
        if config.plan_out:
            correction.save_plan(plan, config.plan_out)
        if gradient is not None and config.gradient_out:
            grad_ds = LatentDataset(Z=gradient.astype(np.float32),
                                    y=np.zeros(n, dtype=np.uint32))
            save_dataset(grad_ds, config.gradient_out, format="binary")

    report = PipelineReport(
        n_samples=n, dim=d, n_clusters=partition.n_clusters,
        modularity=q, conductance=phi,
        assignment_objective=assignment.objective,
        n_cc=int(is_cc.sum()), n_mc=int((~is_cc).sum()),
        n_corr=plan.n_corr, loss=report_loss.loss,
        cluster_mode=config.cluster_mode, loss_mode=plan.mode,
        w=config.w, timings_ms=timings,
    )
    if config.report_out:
        with open(config.report_out, "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report
