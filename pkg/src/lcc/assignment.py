"""Optimal one-to-many matching between detected clusters and true labels.

The matching objective (total count of samples whose cluster is matched to
their own label) separates per cluster: each cluster-to-sink unit of flow
carries the overlap count of exactly one (label, cluster) pair, so a
per-cluster argmax over the overlap matrix is exact. An exhaustive oracle
over all cluster-to-label functions is kept for verification.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict

import numpy as np

from .community import Partition
from .errors import ParameterError

__all__ = ["OverlapMatrix", "Assignment", "overlap_matrix", "optimal_assignment",
           "assignment_objective", "exhaustive_assignment_oracle"]


@dataclass(frozen=True)
class OverlapMatrix:
    """counts[t][c] = number of samples with true label label_ids[t] in cluster c."""

    counts: np.ndarray
    label_ids: np.ndarray

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        labels = np.ascontiguousarray(self.label_ids, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != labels.size:
            raise ParameterError("counts must be |labels| x n_clusters")
        if np.any(counts < 0) or np.any(counts.sum(axis=0) == 0):
            raise ParameterError("counts must be nonnegative with no empty cluster column")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "label_ids", labels)
        counts.setflags(write=False)
        labels.setflags(write=False)

    @property
    def n_clusters(self) -> int:
        return self.counts.shape[1]

    @property
    def n_labels(self) -> int:
        return self.label_ids.size


@dataclass(frozen=True)
class Assignment:
    """Map from cluster id to true-label id, plus its objective value."""

    alpha: Dict[int, int]
    objective: int

    def label_of_cluster(self, c: int) -> int:
        return self.alpha[c]


def overlap_matrix(y, partition: Partition) -> OverlapMatrix:
    """Cross-tabulate true labels against cluster ids (ascending label order)."""
    y = np.asarray(y, dtype=np.int64)
    if y.size != partition.n_nodes:
        raise ParameterError("y has %d entries, partition covers %d nodes"
                             % (y.size, partition.n_nodes))
    label_ids, y_idx = np.unique(y, return_inverse=True)
    counts = np.zeros((label_ids.size, partition.n_clusters), dtype=np.int64)
    np.add.at(counts, (y_idx, partition.cluster_of), 1)
    return OverlapMatrix(counts=counts, label_ids=label_ids)


def optimal_assignment(overlap: OverlapMatrix) -> Assignment:
    """Per-cluster argmax matching; ties go to the smallest label id."""
    best_rows = np.argmax(overlap.counts, axis=0)  # argmax returns first (smallest) index
    alpha = {c: int(overlap.label_ids[best_rows[c]]) for c in range(overlap.n_clusters)}
    objective = int(overlap.counts[best_rows, np.arange(overlap.n_clusters)].sum())
    return Assignment(alpha=alpha, objective=objective)


def assignment_objective(overlap: OverlapMatrix, alpha: Dict[int, int]) -> int:
    """Objective of an arbitrary matching: sum_c counts[alpha(c)][c]."""
    label_pos = {int(t): i for i, t in enumerate(overlap.label_ids)}
    total = 0
    for c in range(overlap.n_clusters):
        if c not in alpha:
            raise ParameterError("alpha is not defined on cluster %d" % c)
        t = alpha[c]
        if t not in label_pos:
            raise ParameterError("alpha maps cluster %d to unknown label %r" % (c, t))
        total += int(overlap.counts[label_pos[t], c])
    return total


def exhaustive_assignment_oracle(overlap: OverlapMatrix, limit: int = 10**6) -> Assignment:
    """Enumerate every cluster-to-label function; verification oracle only.

    Returns the lexicographically smallest optimal alpha (by label positions
    in ascending label order, matching the argmax tie-break).
    """
    n_l, n_c = overlap.n_labels, overlap.n_clusters
    if n_l ** n_c > limit:
        raise ParameterError("search space %d^%d exceeds the enumeration limit" % (n_l, n_c))
    cols = [overlap.counts[:, c] for c in range(n_c)]
    best_obj = -1
    best_choice = None
    for choice in itertools.product(range(n_l), repeat=n_c):
        obj = sum(int(cols[c][choice[c]]) for c in range(n_c))
        if obj > best_obj:
            best_obj = obj
            best_choice = choice
    alpha = {c: int(overlap.label_ids[best_choice[c]]) for c in range(n_c)}
    return Assignment(alpha=alpha, objective=int(best_obj))
