"""Pure-Python reference kernel for the Louvain local-move sweep.

Semantics must match ``_louvain_cy`` exactly: given the same node order the
two kernels accept the same moves in the same sequence.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"


def local_move_sweep(indptr, indices, weights, degree, m, comm, comm_tot, order,
                     gain_tolerance, on_move=None):
    """One sweep of greedy modularity-improving node moves, in place.

    ``comm`` maps node -> community id; ``comm_tot`` holds the summed degree
    of each community and is updated alongside. Returns the number of
    accepted moves. ``on_move``, if given, is called with the incremental
    modularity gain right after each accepted move is applied (the compiled
    kernel does not support it; callers must route to this one).
    """
    if m <= 0:
        return 0
    inv_m = 1.0 / m
    inv_2m2 = 1.0 / (2.0 * m * m)
    n = comm.shape[0]
    w_to = np.zeros(n, dtype=np.float64)  # scratch: weight from node to community
    moves = 0
    for i in order:
        a = comm[i]
        deg_i = degree[i]
        touched = []
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            c = comm[j]
            if w_to[c] == 0.0:
                touched.append(c)
            w_to[c] += weights[p]
        # gain of joining community c, with i removed from its own community
        comm_tot[a] -= deg_i
        stay_gain = w_to[a] * inv_m - deg_i * comm_tot[a] * inv_2m2
        best_c = a
        best_gain = stay_gain
        for c in touched:
            if c == a:
                continue
            g = w_to[c] * inv_m - deg_i * comm_tot[c] * inv_2m2
            if g > best_gain or (g == best_gain and c < best_c):
                best_c = c
                best_gain = g
        if best_c != a and best_gain - stay_gain > gain_tolerance:
            comm[i] = best_c
            comm_tot[best_c] += deg_i
            moves += 1
            if on_move is not None:
                on_move(best_gain - stay_gain)
        else:
            comm_tot[a] += deg_i
        for c in touched:
            w_to[c] = 0.0
    return moves
