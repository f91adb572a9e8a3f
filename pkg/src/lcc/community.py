"""Community detection on the k-NN graph: Louvain/Leiden and k-NN pressure.

Louvain maximizes modularity by greedy local moves plus graph aggregation;
the Leiden variant inserts a refinement phase that splits communities into
well-connected subcommunities before aggregating. k-NN pressure is a
peer-pressure label propagation whose sweeps run as sparse matrix products
and whose stopping rule is based on the conductance of the clustering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import sparse

from ._core import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from ._core import local_move_sweep, local_move_sweep_py
from .errors import ParameterError
from .knn import KnnGraph

__all__ = [
    "Partition",
    "CommunityConfig",
    "PressureState",
    "modularity",
    "louvain",
    "leiden_refine",
    "knn_pressure",
    "conductance_set",
    "conductance_clustering",
    "conductance_clustering_literal",
    "pressure_votes",
    "KERNEL_IMPLEMENTATION",
]


@dataclass(frozen=True)
class Partition:
    """Cluster-id vector over nodes; ids contiguous, every cluster nonempty."""

    cluster_of: np.ndarray
    n_clusters: int

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        labels = np.asarray(labels, dtype=np.int64)
        uniq, inv = np.unique(labels, return_inverse=True)
        lab = np.ascontiguousarray(inv.astype(np.int64))
        lab.setflags(write=False)
        return cls(cluster_of=lab, n_clusters=int(uniq.size))

    def __post_init__(self):
        lab = np.ascontiguousarray(self.cluster_of, dtype=np.int64)
        if lab.ndim != 1 or lab.size == 0:
            raise ParameterError("cluster_of must be a nonempty 1-D vector")
        if lab.min() < 0 or lab.max() != self.n_clusters - 1 or \
                np.any(np.bincount(lab, minlength=self.n_clusters) == 0):
            raise ParameterError("cluster ids must be contiguous 0..n_clusters-1 with no empty cluster")
        object.__setattr__(self, "cluster_of", lab)
        lab.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.cluster_of.size

    def dump(self, path) -> None:
        """Text dump: one line ``node_id cluster_id`` per node."""
        with open(path, "w") as fh:
            for i, c in enumerate(self.cluster_of):
                fh.write("%d %d\n" % (i, c))

    @classmethod
    def load(cls, path) -> "Partition":
        pairs = np.loadtxt(path, dtype=np.int64, ndmin=2)
        labels = np.full(pairs.shape[0], -1, dtype=np.int64)
        labels[pairs[:, 0]] = pairs[:, 1]
        if np.any(labels < 0):
            raise ParameterError("partition file does not cover nodes 0..N-1")
        return cls.from_labels(labels)


@dataclass(frozen=True)
class CommunityConfig:
    mode: str = "leiden"
    seed: int = 0
    gain_tolerance: float = 1e-12
    max_passes: int = 100

    def __post_init__(self):
        if self.mode not in ("louvain", "leiden"):
            raise ParameterError("mode must be 'louvain' or 'leiden', got %r" % self.mode)
        if self.gain_tolerance <= 0:
            raise ParameterError("gain_tolerance must be positive")
        if self.max_passes < 1:
            raise ParameterError("max_passes must be >= 1")


@dataclass
class PressureState:
    """Final membership matrix and the accepted conductance trajectory."""

    membership: sparse.csr_matrix
    conductance_history: List[float] = field(default_factory=list)


def _contiguize(labels: np.ndarray) -> np.ndarray:
    _, inv = np.unique(labels, return_inverse=True)
    return inv.astype(np.int64)


class _Agg:
    """Working graph of one Louvain level: CSR adjacency plus self-loops.

    ``degree[i]`` counts self-loops twice; ``m`` is the constant total weight
    of the original graph.
    """

    __slots__ = ("n", "indptr", "indices", "weights", "self_loops", "degree", "m")

    def __init__(self, n, indptr, indices, weights, self_loops, m):
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self.weights = weights
        self.self_loops = self_loops
        self.degree = np.zeros(n, dtype=np.float64)
        np.add.at(self.degree, np.repeat(np.arange(n), np.diff(indptr)), weights)
        self.degree += 2.0 * self_loops
        self.m = float(m)


def _agg_from_graph(graph: KnnGraph) -> _Agg:
    A = graph.adjacency()
    return _Agg(
        graph.n_nodes,
        A.indptr.astype(np.int64),
        A.indices.astype(np.int64),
        A.data.astype(np.float64),
        np.zeros(graph.n_nodes, dtype=np.float64),
        graph.total_weight,
    )


def _aggregate(agg: _Agg, labels: np.ndarray) -> _Agg:
    """Collapse each community to one node; intra weight becomes a self-loop."""
    n_new = int(labels.max()) + 1
    row = labels[np.repeat(np.arange(agg.n), np.diff(agg.indptr))]
    col = labels[agg.indices]
    M = sparse.csr_matrix((agg.weights, (row, col)), shape=(n_new, n_new))
    M.sum_duplicates()
    diag = M.diagonal()
    self_loops = diag / 2.0 + np.bincount(labels, weights=agg.self_loops, minlength=n_new)
    M.setdiag(0.0)
    M.eliminate_zeros()
    return _Agg(n_new, M.indptr.astype(np.int64), M.indices.astype(np.int64),
                M.data.astype(np.float64), self_loops, agg.m)


def _modularity_agg(agg: _Agg, comm: np.ndarray) -> float:
    if agg.m <= 0:
        return 0.0
    lab = _contiguize(comm)
    row = np.repeat(np.arange(agg.n), np.diff(agg.indptr))
    same = lab[row] == lab[agg.indices]
    intra = float(agg.weights[same].sum()) / 2.0 + float(agg.self_loops.sum())
    tot = np.bincount(lab, weights=agg.degree)
    return intra / agg.m - float(np.sum((tot / (2.0 * agg.m)) ** 2))


def modularity(graph: KnnGraph, partition: Partition) -> float:
    """Newman modularity of a partition of the (self-loop-free) input graph."""
    if partition.n_nodes != graph.n_nodes:
        raise ParameterError(
            "partition covers %d nodes, graph has %d" % (partition.n_nodes, graph.n_nodes))
    m = graph.total_weight
    if m <= 0:
        return 0.0
    lab = partition.cluster_of
    same = lab[graph.edge_i] == lab[graph.edge_j]
    intra = float(graph.edge_w[same].sum())
    tot = np.bincount(lab, weights=graph.degree_weights, minlength=partition.n_clusters)
    return intra / m - float(np.sum((tot / (2.0 * m)) ** 2))


def _refine(agg: _Agg, comm: np.ndarray, rng: np.random.Generator,
            gain_tolerance: float) -> np.ndarray:
    """Leiden refinement: split each community into connected subcommunities.

    Within each community, nodes start as singletons; singleton nodes (in a
    seeded random order) merge into the adjacent subcommunity of the same
    community with the largest positive modularity gain. A positive gain
    requires an edge, so every resulting subcommunity is connected.
    """
    n = agg.n
    sub = np.arange(n, dtype=np.int64)
    sub_tot = agg.degree.copy()
    sub_size = np.ones(n, dtype=np.int64)
    if agg.m <= 0:
        return sub
    inv_m = 1.0 / agg.m
    inv_2m2 = 1.0 / (2.0 * agg.m * agg.m)
    w_to = np.zeros(n, dtype=np.float64)
    for i in rng.permutation(n):
        a = sub[i]
        if sub_size[a] > 1:
            continue
        touched = []
        for p in range(agg.indptr[i], agg.indptr[i + 1]):
            j = agg.indices[p]
            if comm[j] != comm[i]:
                continue
            c = sub[j]
            if w_to[c] == 0.0:
                touched.append(c)
            w_to[c] += agg.weights[p]
        deg_i = agg.degree[i]
        best_c, best_gain = a, 0.0
        for c in touched:
            if c == a:
                continue
            g = w_to[c] * inv_m - deg_i * sub_tot[c] * inv_2m2
            if g > best_gain or (g == best_gain and best_c != a and c < best_c):
                best_c, best_gain = c, g
        if best_c != a and best_gain > gain_tolerance:
            sub[i] = best_c
            sub_tot[best_c] += deg_i
            sub_tot[a] -= deg_i
            sub_size[best_c] += 1
            sub_size[a] -= 1
        for c in touched:
            w_to[c] = 0.0
    return _contiguize(sub)


def leiden_refine(graph: KnnGraph, partition: Partition, seed: int = 0) -> Partition:
    """Refine a partition into connected subcommunities (public wrapper)."""
    if partition.n_nodes != graph.n_nodes:
        raise ParameterError("partition size does not match graph")
    agg = _agg_from_graph(graph)
    rng = np.random.default_rng(seed)
    sub = _refine(agg, partition.cluster_of, rng, 1e-12)
    return Partition.from_labels(sub)


def louvain(graph: KnnGraph, config: Optional[CommunityConfig] = None,
            gain_audit: Optional[list] = None,
            info: Optional[dict] = None) -> Partition:
    """Louvain (or Louvain-Leiden) community detection.

    Deterministic per config seed. When ``gain_audit`` is a list, every
    accepted local move appends ``(incremental_gain, recomputed_gain)`` where
    the second entry is the full modularity difference of the working graph;
    this forces the pure-Python kernel. ``info`` (a dict) receives the number
    of levels executed under key ``"passes"``.
    """
    if config is None:
        config = CommunityConfig()
    rng = np.random.default_rng(config.seed)
    agg = _agg_from_graph(graph)
    proj = np.arange(graph.n_nodes, dtype=np.int64)
    init_comm = np.arange(agg.n, dtype=np.int64)
    result = proj.copy()
    passes = 0
    for _level in range(config.max_passes):
        passes += 1
        comm = init_comm.copy()
        comm_tot = np.bincount(comm, weights=agg.degree, minlength=agg.n).astype(np.float64)
        sweep = local_move_sweep
        on_move = None
        if gain_audit is not None:
            sweep = local_move_sweep_py
            q_ref = [_modularity_agg(agg, comm)]
            agg_here, comm_here = agg, comm

            def on_move(delta, _q=q_ref, _a=agg_here, _c=comm_here):
                q_new = _modularity_agg(_a, _c)
                gain_audit.append((delta, q_new - _q[0]))
                _q[0] = q_new

        total_moves = 0
        for _ in range(config.max_passes):
            order = rng.permutation(agg.n).astype(np.int64)
            moves = sweep(agg.indptr, agg.indices, agg.weights, agg.degree, agg.m,
                          comm, comm_tot, order, config.gain_tolerance, on_move)
            total_moves += moves
            if moves == 0:
                break
        lab = _contiguize(comm)
        result = lab[proj]
        if total_moves == 0:
            break
        if config.mode == "leiden":
            sub = _refine(agg, comm, rng, config.gain_tolerance)
            # next level starts from the refined subcommunities grouped by parent
            parent = np.zeros(int(sub.max()) + 1, dtype=np.int64)
            parent[sub] = lab
            agg = _aggregate(agg, sub)
            proj = sub[proj]
            init_comm = parent
        else:
            agg = _aggregate(agg, lab)
            proj = lab[proj]
            init_comm = np.arange(agg.n, dtype=np.int64)
    if info is not None:
        info["passes"] = passes
    return Partition.from_labels(result)


# ---------------------------------------------------------------------------
# conductance


def _conductance_per_cluster(graph: KnnGraph, labels: np.ndarray):
    """Per-cluster (volume, cut, phi) arrays under the Eq.-style conventions."""
    n_clusters = int(labels.max()) + 1
    vol = np.bincount(labels, weights=graph.degree_weights, minlength=n_clusters)
    cross = labels[graph.edge_i] != labels[graph.edge_j]
    cut = np.zeros(n_clusters, dtype=np.float64)
    np.add.at(cut, labels[graph.edge_i[cross]], graph.edge_w[cross])
    np.add.at(cut, labels[graph.edge_j[cross]], graph.edge_w[cross])
    total = vol.sum()
    denom = np.minimum(vol, total - vol)
    phi = np.ones(n_clusters, dtype=np.float64)
    ok = denom > 0
    # mathematically cut <= min(vol, total - vol); clamp float-order noise
    phi[ok] = np.minimum(cut[ok] / denom[ok], 1.0)
    return vol, cut, phi


def conductance_set(graph: KnnGraph, node_set) -> float:
    """Conductance of one node subset: cut / min(vol, complement vol).

    Returns 1.0 when the denominator is 0 (empty complement or zero volume).
    """
    nodes = np.asarray(list(node_set) if not isinstance(node_set, np.ndarray) else node_set,
                       dtype=np.int64)
    if nodes.size == 0:
        raise ParameterError("node_set must be nonempty")
    if nodes.min() < 0 or nodes.max() >= graph.n_nodes:
        raise ParameterError("node_set contains out-of-range node ids")
    mask = np.zeros(graph.n_nodes, dtype=bool)
    mask[nodes] = True
    deg = graph.degree_weights
    vol_c = float(deg[mask].sum())
    vol_rest = float(deg[~mask].sum())
    cross = mask[graph.edge_i] != mask[graph.edge_j]
    cut = float(graph.edge_w[cross].sum())
    denom = min(vol_c, vol_rest)
    if denom <= 0:
        return 1.0
    return min(cut / denom, 1.0)


def _conductance_labels(graph: KnnGraph, labels: np.ndarray) -> float:
    vol, _, phi = _conductance_per_cluster(graph, labels)
    total = vol.sum()
    if total <= 0:
        return 1.0
    return float(np.sum(vol * phi) / total)


def conductance_clustering(graph: KnnGraph, partition: Partition) -> float:
    """Volume-weighted mean conductance of a clustering, in [0, 1].

    Normalized by total volume (not node count) so that 0 means perfect and
    1 worst; 1.0 for an edgeless graph.
    """
    if partition.n_nodes != graph.n_nodes:
        raise ParameterError("partition size does not match graph")
    return _conductance_labels(graph, partition.cluster_of)


def conductance_clustering_literal(graph: KnnGraph, partition: Partition) -> float:
    """Node-count-normalized variant, reported for diagnostics only."""
    if partition.n_nodes != graph.n_nodes:
        raise ParameterError("partition size does not match graph")
    vol, _, phi = _conductance_per_cluster(graph, partition.cluster_of)
    return float(np.sum(vol * phi) / graph.n_nodes)


# ---------------------------------------------------------------------------
# k-NN pressure


def _membership_matrix(labels: np.ndarray) -> sparse.csr_matrix:
    n = labels.size
    n_clusters = int(labels.max()) + 1
    return sparse.csr_matrix(
        (np.ones(n), (np.arange(n), labels)), shape=(n, n_clusters))


def pressure_votes(A, labels: np.ndarray, dense: bool = False) -> np.ndarray:
    """Neighbor vote matrix V[i, c] = summed edge weight from i to cluster c.

    ``dense=True`` runs the definitional dense product; the sparse product
    must agree with it exactly on exact-weight graphs.
    """
    B = _membership_matrix(labels)
    if dense:
        return np.asarray(A.toarray() @ B.toarray())
    return np.asarray((A @ B).toarray())


def _pressure_sweep(A, labels: np.ndarray, seed: int, sweep: int,
                    dense: bool = False) -> np.ndarray:
    votes = pressure_votes(A, labels, dense=dense)
    new = labels.copy()
    row_max = votes.max(axis=1) if votes.size else np.zeros(labels.size)
    for i in range(labels.size):
        if row_max[i] <= 0.0:
            continue  # isolated node keeps its community
        cands = np.nonzero(votes[i] == row_max[i])[0]
        if cands.size == 1:
            new[i] = cands[0]
        else:
            # tie-break independent of execution order: rng keyed per node
            rng = np.random.default_rng([seed, sweep, i])
            new[i] = cands[rng.integers(cands.size)]
    return new


def knn_pressure(graph: KnnGraph, seed: int = 0, max_iters: int = 100,
                 dense: bool = False):
    """Peer-pressure clustering with a conductance stopping rule.

    Starts from singletons; every sweep simultaneously moves each node to the
    neighbor community with the largest weighted representation (random
    seeded tie-breaks). Stops at the first sweep whose clustering conductance
    fails to strictly decrease, returning the previous clustering.
    """
    if max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    n = graph.n_nodes
    A = graph.adjacency()
    labels = np.arange(n, dtype=np.int64)
    history = [_conductance_labels(graph, labels)]
    for sweep in range(1, max_iters + 1):
        new = _contiguize(_pressure_sweep(A, labels, seed, sweep, dense=dense))
        phi = _conductance_labels(graph, new)
        if not phi < history[-1]:
            break
        labels = new
        history.append(phi)
    state = PressureState(membership=_membership_matrix(labels),
                          conductance_history=history)
    return Partition.from_labels(labels), state
