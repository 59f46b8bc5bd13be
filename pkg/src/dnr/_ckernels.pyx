# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as dnr._pykernels."""

import numpy as np

from libc.stdlib cimport malloc, free
from libc.stdint cimport int64_t, uint64_t

BACKEND = "cython"


cdef int _popcount(uint64_t x) nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef int _loop_search(int n_nodes, int n_edges, const int* eu, const int* ev,
                      uint64_t mask, int* stack_node, int* stack_via,
                      unsigned char* seen) nogil:
    """Returns number of visited nodes, or -1 when a second path is found."""
    cdef int i, e, top, u, v, via, count
    for i in range(n_nodes):
        seen[i] = 0
    seen[0] = 1
    count = 1
    top = 0
    stack_node[0] = 0
    stack_via[0] = -1
    top = 1
    while top > 0:
        top -= 1
        u = stack_node[top]
        via = stack_via[top]
        for e in range(n_edges):
            if e == via or not ((mask >> e) & 1):
                continue
            if eu[e] == u:
                v = ev[e]
            elif ev[e] == u:
                v = eu[e]
            else:
                continue
            if seen[v]:
                return -1
            seen[v] = 1
            count += 1
            stack_node[top] = v
            stack_via[top] = e
            top += 1
    return count


def loop_search_mask(int n_nodes, eu_in, ev_in, uint64_t mask):
    """Single-mask loop search; returns (loop_free, visited node list)."""
    cdef int n = len(eu_in)
    cdef int i, r
    cdef int* eu = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* ev = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* sn = <int*>malloc((n_nodes + n + 1) * sizeof(int))
    cdef int* sv = <int*>malloc((n_nodes + n + 1) * sizeof(int))
    cdef unsigned char* seen = <unsigned char*>malloc(n_nodes)
    try:
        for i in range(n):
            eu[i] = eu_in[i]
            ev[i] = ev_in[i]
        r = _loop_search(n_nodes, n, eu, ev, mask, sn, sv, seen)
        return r >= 0, [i for i in range(n_nodes) if seen[i]]
    finally:
        free(eu); free(ev); free(sn); free(sv); free(seen)


def sweep_radial(int n_nodes, eu_in, ev_in, group_masks, bint prune=True):
    cdef int n = len(eu_in)
    cdef int n_groups = len(group_masks) if prune else 0
    cdef int i, g, visited
    cdef int target = n_nodes - 1
    cdef uint64_t mask, total = (<uint64_t>1) << n
    cdef int64_t pruned = 0, rej_count = 0, rej_loop = 0, rej_conn = 0
    cdef bint skip
    cdef int* eu = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* ev = <int*>malloc(max(n, 1) * sizeof(int))
    cdef uint64_t* groups = <uint64_t*>malloc(max(n_groups, 1) * sizeof(uint64_t))
    cdef int* sn = <int*>malloc((n_nodes + n + 1) * sizeof(int))
    cdef int* sv = <int*>malloc((n_nodes + n + 1) * sizeof(int))
    cdef unsigned char* seen = <unsigned char*>malloc(n_nodes)
    radial = []
    try:
        for i in range(n):
            eu[i] = eu_in[i]
            ev[i] = ev_in[i]
        for g in range(n_groups):
            groups[g] = group_masks[g]
        mask = 0
        while mask < total:
            skip = False
            for g in range(n_groups):
                if mask & groups[g] == groups[g]:
                    skip = True
                    break
            if skip:
                pruned += 1
            elif _popcount(mask) != target:
                rej_count += 1
            else:
                visited = _loop_search(n_nodes, n, eu, ev, mask, sn, sv, seen)
                if visited < 0:
                    rej_loop += 1
                elif visited != n_nodes:
                    rej_conn += 1
                else:
                    radial.append(mask)
            mask += 1
    finally:
        free(eu); free(ev); free(groups); free(sn); free(sv); free(seen)
    return radial, {
        "candidates": int(total),
        "pruned": pruned,
        "examined": int(total) - pruned,
        "rejected_count": rej_count,
        "rejected_loop": rej_loop,
        "rejected_connectivity": rej_conn,
        "radial": len(radial),
    }


def path_argmin(const double[:, :] values, infeasible_in, reachable_in):
    cdef const unsigned char[:, :] infeasible = np.ascontiguousarray(infeasible_in, dtype=np.uint8)
    cdef const int64_t[:] reachable = np.ascontiguousarray(reachable_in, dtype=np.int64)
    cdef Py_ssize_t n_t = values.shape[1]
    cdef Py_ssize_t n_r = reachable.shape[0]
    cdef Py_ssize_t t, k
    cdef int64_t c, best, prev
    cdef double v, best_val
    path_arr = np.full(n_t, -1, dtype=np.int64)
    cdef int64_t[:] path = path_arr
    for t in range(n_t):
        best = -1
        best_val = 0.0
        for k in range(n_r):
            c = reachable[k]
            if infeasible[c, t]:
                continue
            v = values[c, t]
            if best < 0 or v < best_val:
                best = c
                best_val = v
        if best < 0:
            return path_arr, t
        if t > 0:
            prev = path[t - 1]
            if not infeasible[prev, t] and values[prev, t] == best_val:
                best = prev
        path[t] = best
    return path_arr, -1
