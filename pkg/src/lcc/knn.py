"""Weighted k-nearest-neighbor graph over latent vectors.

Nodes are sample indices; an undirected edge (i, j) exists iff i is among the
k nearest neighbors of j or conversely, weighted by the Gaussian RBF
``exp(-beta * ||z_i - z_j||^2)``. Distance ties are broken by smaller index,
so the edge set is deterministic. Edges whose weight underflows to 0.0 are
dropped; a 0-weight edge contributes nothing to modularity but would corrupt
degree bookkeeping.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .errors import ParameterError, ValidationError

# below this many nodes the O(N^2) search is faster than building a tree
_TREE_THRESHOLD = 512


class KnnGraph:
    """Sparse symmetric weighted graph, immutable after construction.

    Edges are stored canonically as (i, j, w) with i < j, sorted by (i, j).
    """

    def __init__(self, n_nodes: int, edge_i: np.ndarray, edge_j: np.ndarray, edge_w: np.ndarray):
        self.n_nodes = int(n_nodes)
        ei = np.asarray(edge_i, dtype=np.int64)
        ej = np.asarray(edge_j, dtype=np.int64)
        ew = np.asarray(edge_w, dtype=np.float64)
        if not (ei.shape == ej.shape == ew.shape):
            raise ValidationError("edge arrays must have equal length")
        if ei.size and (np.any(ei >= ej) or np.any(ei < 0) or np.any(ej >= self.n_nodes)):
            raise ValidationError("edges must satisfy 0 <= i < j < n_nodes")
        order = np.lexsort((ej, ei))
        self.edge_i = ei[order]
        self.edge_j = ej[order]
        self.edge_w = ew[order]
        for a in (self.edge_i, self.edge_j, self.edge_w):
            a.setflags(write=False)
        self._csr: Optional[sparse.csr_matrix] = None

    @property
    def n_edges(self) -> int:
        return self.edge_i.size

    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric CSR adjacency (both directions stored, no self loops)."""
        if self._csr is None:
            n = self.n_nodes
            rows = np.concatenate([self.edge_i, self.edge_j])
            cols = np.concatenate([self.edge_j, self.edge_i])
            data = np.concatenate([self.edge_w, self.edge_w])
            self._csr = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        return self._csr

    @property
    def degree_weights(self) -> np.ndarray:
        """k_i = sum of weights of edges incident to node i."""
        return np.asarray(self.adjacency().sum(axis=1)).ravel()

    @property
    def total_weight(self) -> float:
        """m = sum of all edge weights (each undirected edge once)."""
        return float(self.edge_w.sum())

    def dump(self, path) -> None:
        """Debug dump: one line ``i j w`` per edge, sorted by (i, j)."""
        with open(path, "w") as fh:
            for i, j, w in zip(self.edge_i, self.edge_j, self.edge_w):
                fh.write("%d %d %.17g\n" % (i, j, w))


def rbf_weight(z_i, z_j, beta: float = 1.0) -> float:
    """Gaussian RBF weight exp(-beta * ||z_i - z_j||^2)."""
    z_i = np.asarray(z_i, dtype=np.float64)
    z_j = np.asarray(z_j, dtype=np.float64)
    d2 = float(np.sum((z_i - z_j) ** 2))
    return float(np.exp(-beta * d2))


def median_heuristic_beta(Z: np.ndarray, max_pairs: int = 2048) -> float:
    """1 / median squared pairwise distance, over a deterministic pair sample."""
    Z = np.asarray(Z, dtype=np.float64)
    n = Z.shape[0]
    if n < 2:
        raise ParameterError("need at least 2 samples for the median heuristic")
    rng = np.random.default_rng(0)
    n_pairs = min(max_pairs, n * (n - 1) // 2)
    ii = rng.integers(0, n, size=2 * n_pairs)
    jj = rng.integers(0, n, size=2 * n_pairs)
    mask = ii != jj
    ii, jj = ii[mask][:n_pairs], jj[mask][:n_pairs]
    d2 = np.sum((Z[ii] - Z[jj]) ** 2, axis=1)
    med = float(np.median(d2))
    if med <= 0:
        return 1.0
    return 1.0 / med


def _neighbors_brute(Z: np.ndarray, k: int) -> np.ndarray:
    """Exact k-NN lists by exhaustive search; ties broken by smaller index."""
    d2 = np.sum((Z[:, None, :] - Z[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps the smaller index first among equal distances
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def _neighbors_tree(Z: np.ndarray, k: int) -> np.ndarray:
    """k-NN lists via a KD-tree; nodes with a boundary tie fall back to brute."""
    n = Z.shape[0]
    tree = cKDTree(Z)
    n_query = min(n, k + 2)  # self + k + one boundary probe
    dist, idx = tree.query(Z, k=n_query)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        di, ni = dist[i], idx[i]
        keep = ni != i
        di, ni = di[keep][:k + 1], ni[keep][:k + 1]
        ambiguous = di.size > k and di[k - 1] == di[k]
        if ambiguous or np.any(di[:-1] == di[1:]):
            # equal distances: redo this node with the stable exhaustive rule
            row = np.sum((Z - Z[i]) ** 2, axis=1)
            row[i] = np.inf
            out[i] = np.argsort(row, kind="stable")[:k]
        else:
            out[i] = ni[:k]
    return out


def build_knn_graph(Z: np.ndarray, k: int, beta=1.0, method: str = "auto") -> KnnGraph:
    """Build the RBF-weighted k-NN graph of the rows of Z.

    ``beta`` may be a positive real or the string ``"median"`` for the median
    heuristic. ``method`` is one of ``auto``, ``brute``, ``tree``; both search
    paths produce the identical edge set.
    """
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 1:
        raise ValidationError("Z must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(Z)):
        raise ValidationError("Z contains non-finite values")
    n = Z.shape[0]
    if not isinstance(k, (int, np.integer)) or k <= 0:
        raise ParameterError("k must be a positive integer, got %r" % (k,))
    if k >= n:
        raise ParameterError("k=%d must be < N=%d" % (k, n))
    if beta == "median":
        beta = median_heuristic_beta(Z)
    beta = float(beta)
    if beta <= 0:
        raise ParameterError("beta must be positive, got %g" % beta)
    if method not in ("auto", "brute", "tree"):
        raise ParameterError("unknown method %r" % method)
    if method == "auto":
        method = "tree" if n > _TREE_THRESHOLD else "brute"

    nbrs = _neighbors_brute(Z, k) if method == "brute" else _neighbors_tree(Z, k)

    src = np.repeat(np.arange(n, dtype=np.int64), k)
    dst = nbrs.ravel()
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    ei, ej = pairs[:, 0], pairs[:, 1]
    # recompute distances from Z so both search paths yield identical weights
    d2 = np.sum((Z[ei] - Z[ej]) ** 2, axis=1)
    w = np.exp(-beta * d2)
    keep = w > 0.0
    return KnnGraph(n, ei[keep], ej[keep], w[keep])
