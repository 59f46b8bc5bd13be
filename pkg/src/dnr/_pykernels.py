"""Pure-Python kernels; reference behaviour for :mod:`dnr._ckernels`."""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _adjacency(n_nodes, eu, ev):
    adj = [[] for _ in range(n_nodes)]
    for i, (a, b) in enumerate(zip(eu, ev)):
        adj[a].append((i, b))
        adj[b].append((i, a))
    return adj


def loop_search(adj, mask):
    """DFS from node 0 over closed edges. Returns (loop_free, visited node list)."""
    seen = {0}
    stack = [(0, -1)]
    while stack:
        u, via = stack.pop()
        for e, v in adj[u]:
            if e == via or not (mask >> e) & 1:
                continue
            if v in seen:
                return False, sorted(seen)
            seen.add(v)
            stack.append((v, e))
    return True, sorted(seen)


def sweep_radial(n_nodes, eu, ev, group_masks, prune=True):
    """Check every switch mask in ascending order; count -> loop -> connectivity."""
    n = len(eu)
    adj = _adjacency(n_nodes, eu, ev)
    target = n_nodes - 1
    groups = list(group_masks) if prune else []
    radial = []
    pruned = rej_count = rej_loop = rej_conn = 0
    for mask in range(1 << n):
        if any(mask & g == g for g in groups):
            pruned += 1
            continue
        if bin(mask).count("1") != target:
            rej_count += 1
            continue
        ok, visited = loop_search(adj, mask)
        if not ok:
            rej_loop += 1
            continue
        if len(visited) != n_nodes:
            rej_conn += 1
            continue
        radial.append(mask)
    return radial, {
        "candidates": 1 << n,
        "pruned": pruned,
        "examined": (1 << n) - pruned,
        "rejected_count": rej_count,
        "rejected_loop": rej_loop,
        "rejected_connectivity": rej_conn,
        "radial": len(radial),
    }


def path_argmin(values, infeasible, reachable):
    """Per-timestep argmin over ``reachable`` rows.

    Ties keep the previous timestep's row, otherwise the lowest row index.
    Returns (path, bad_timestep) with bad_timestep = -1 when every column had
    a feasible reachable cell.
    """
    n_t = values.shape[1]
    path = np.full(n_t, -1, dtype=np.int64)
    for t in range(n_t):
        best = -1
        best_val = 0.0
        for c in reachable:
            if infeasible[c, t]:
                continue
            v = values[c, t]
            if best < 0 or v < best_val:
                best, best_val = c, v
        if best < 0:
            return path, t
        if t > 0:
            prev = path[t - 1]
            if not infeasible[prev, t] and values[prev, t] == best_val:
                best = prev
        path[t] = best
    return path, -1
