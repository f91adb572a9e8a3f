"""Benchmark the compiled Louvain local-move kernel against the pure-Python one.

Builds a k-NN graph over a synthetic blob dataset, then times repeated
local-move sweeps through both kernels on identical inputs and checks that
they produce the same community assignment.

Usage: python3 benchmarks/bench_louvain.py [--n-labels 20] [--samples 500]
"""

import argparse
import time

import numpy as np

from lcc._core import IMPLEMENTATION, local_move_sweep, local_move_sweep_py
from lcc.dataset import BlobSpec, generate_blobs
from lcc.knn import build_knn_graph


def sweep_inputs(graph):
    adj = graph.adjacency()
    indptr = adj.indptr.astype(np.int64)
    indices = adj.indices.astype(np.int64)
    weights = adj.data.astype(np.float64)
    degree = graph.degree_weights.astype(np.float64)
    m = float(graph.total_weight)
    return indptr, indices, weights, degree, m


def run(kernel, graph, sweeps, seed=0):
    indptr, indices, weights, degree, m = sweep_inputs(graph)
    n = graph.n_nodes
    comm = np.arange(n, dtype=np.int64)
    comm_tot = degree.copy()
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    total_moves = 0
    for _ in range(sweeps):
        order = rng.permutation(n).astype(np.int64)
        total_moves += kernel(indptr, indices, weights, degree, m,
                              comm, comm_tot, order, 1e-12)
    elapsed = time.perf_counter() - start
    return elapsed, total_moves, comm


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-labels", type=int, default=20)
    parser.add_argument("--samples", type=int, default=500,
                        help="samples per label")
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--sweeps", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    ds = generate_blobs(BlobSpec(
        n_labels=args.n_labels, clusters_per_label=1,
        samples_per_cluster=args.samples, dim=args.dim,
        cluster_sigma=1.0, seed=0))
    graph = build_knn_graph(ds.z64(), args.k)
    print("graph: %d nodes, %d edges (selected kernel: %s)"
          % (graph.n_nodes, graph.edge_w.size, IMPLEMENTATION))

    results = {}
    for name, kernel in (("compiled" if IMPLEMENTATION == "cython" else IMPLEMENTATION,
                          local_move_sweep),
                         ("python", local_move_sweep_py)):
        best = None
        for _ in range(args.repeats):
            elapsed, moves, comm = run(kernel, graph, args.sweeps)
            best = elapsed if best is None else min(best, elapsed)
        results[name] = (best, moves, comm)
        print("%-9s %.4f s for %d sweeps (%d moves)"
              % (name, best, args.sweeps, moves))

    names = list(results)
    if len(names) == 2 and names[0] != names[1]:
        (ta, _, ca), (tb, _, cb) = results[names[0]], results[names[1]]
        assert np.array_equal(ca, cb), "kernels disagree on the final communities"
        print("speedup: %.1fx (identical community assignments)" % (tb / ta))


if __name__ == "__main__":
    main()
