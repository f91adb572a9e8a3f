# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Louvain local-move sweep.

Must accept exactly the same moves as ``_louvain_py.local_move_sweep`` given
the same inputs; the pure-Python module is the reference.
"""

import numpy as np

cimport numpy as cnp

IMPLEMENTATION = "cython"


def local_move_sweep(cnp.int64_t[::1] indptr,
                     cnp.int64_t[::1] indices,
                     cnp.float64_t[::1] weights,
                     cnp.float64_t[::1] degree,
                     double m,
                     cnp.int64_t[::1] comm,
                     cnp.float64_t[::1] comm_tot,
                     cnp.int64_t[::1] order,
                     double gain_tolerance,
                     on_move=None):
    if on_move is not None:
        raise ValueError("the compiled kernel does not support move callbacks")
    if m <= 0:
        return 0
    cdef double inv_m = 1.0 / m
    cdef double inv_2m2 = 1.0 / (2.0 * m * m)
    cdef Py_ssize_t n = comm.shape[0]
    cdef cnp.float64_t[::1] w_to = np.zeros(n, dtype=np.float64)
    cdef cnp.int64_t[::1] touched = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t oi, p, n_touched, t
    cdef cnp.int64_t i, a, c, best_c
    cdef double deg_i, stay_gain, best_gain, g
    cdef long moves = 0

    for oi in range(order.shape[0]):
        i = order[oi]
        a = comm[i]
        deg_i = degree[i]
        n_touched = 0
        for p in range(indptr[i], indptr[i + 1]):
            c = comm[indices[p]]
            if w_to[c] == 0.0:
                touched[n_touched] = c
                n_touched += 1
            w_to[c] += weights[p]
        comm_tot[a] -= deg_i
        stay_gain = w_to[a] * inv_m - deg_i * comm_tot[a] * inv_2m2
        best_c = a
        best_gain = stay_gain
        for t in range(n_touched):
            c = touched[t]
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
        else:
            comm_tot[a] += deg_i
        for t in range(n_touched):
            w_to[touched[t]] = 0.0
    return moves
