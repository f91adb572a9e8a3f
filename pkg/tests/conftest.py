"""Shared test helpers: small-graph brute-force oracles and random instances."""

import numpy as np
import pytest

from lcc.community import Partition, modularity
from lcc.knn import KnnGraph


def make_graph(n, edges):
    """Graph from (i, j, w) triples (undirected, i != j)."""
    if not edges:
        return KnnGraph(n, np.empty(0, np.int64), np.empty(0, np.int64),
                        np.empty(0, np.float64))
    ei = np.array([min(i, j) for i, j, _ in edges], dtype=np.int64)
    ej = np.array([max(i, j) for i, j, _ in edges], dtype=np.int64)
    ew = np.array([w for _, _, w in edges], dtype=np.float64)
    return KnnGraph(n, ei, ej, ew)


def random_graph(rng, n, p=0.4, integer_weights=False):
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                w = float(rng.integers(1, 5)) if integer_weights else float(rng.uniform(0.1, 1.0))
                edges.append((i, j, w))
    return make_graph(n, edges)


def set_partitions(n):
    """All partitions of range(n) as restricted-growth label vectors."""
    labels = [0] * n

    def rec(i, max_used):
        if i == n:
            yield list(labels)
            return
        for c in range(max_used + 2):
            labels[i] = c
            yield from rec(i + 1, max(max_used, c))

    yield from rec(1, 0)


def brute_force_best_partition(graph):
    """Exhaustive modularity optimum; usable up to n ~ 10."""
    best_q = -np.inf
    best = None
    for labels in set_partitions(graph.n_nodes):
        part = Partition.from_labels(labels)
        q = modularity(graph, part)
        if q > best_q:
            best_q = q
            best = part
    return best, best_q


def two_cliques_bridge():
    """Two unit-weight 4-cliques joined by one unit edge (nodes 0-3 and 4-7)."""
    edges = []
    for base in (0, 4):
        for a in range(4):
            for b in range(a + 1, 4):
                edges.append((base + a, base + b, 1.0))
    edges.append((3, 4, 1.0))
    return make_graph(8, edges)


def two_triangles():
    edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0),
             (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)]
    return make_graph(6, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
