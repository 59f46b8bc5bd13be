"""Reduce a switched network to its switch graph.

Feeder heads are merged into a super node (node 0), every switch-free connected
region becomes one graph node, and every switch becomes an edge. Switches that
end up as self-loops are permanently open; sets of switches lying on a common
cycle are recorded so enumeration can skip configurations closing all of them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

from .network import NetworkCase, _UnionFind


@dataclass(frozen=True)
class ReducedGraph:
    nodes: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[str, int, int], ...]
    fixed_open: frozenset[str] = frozenset()
    cycle_groups: tuple[frozenset[str], ...] = ()

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def switch_order(self) -> tuple[str, ...]:
        """Canonical bit order of configurations (sorted switch ids)."""
        return tuple(e[0] for e in self.edges)

    def node_of(self) -> dict[str, int]:
        return {bus: i for i, members in enumerate(self.nodes) for bus in members}

    def group_masks(self) -> list[int]:
        pos = {sid: i for i, sid in enumerate(self.switch_order)}
        return [sum(1 << pos[s] for s in g) for g in self.cycle_groups]

    def to_dict(self) -> dict:
        return {
            "nodes": [list(n) for n in self.nodes],
            "edges": [{"switch": s, "a": a, "b": b} for s, a, b in self.edges],
            "fixed_open": sorted(self.fixed_open),
            "cycle_groups": [sorted(g) for g in self.cycle_groups],
        }


def _contract(case: NetworkCase) -> tuple[tuple[tuple[str, ...], ...], dict[str, int]]:
    bus_ids = [b.id for b in case.buses]
    uf = _UnionFind(range(len(bus_ids)))
    index = case.bus_index()
    heads = [index[h] for h in case.feeder_heads]
    for h in heads[1:]:
        uf.union(heads[0], h)
    for br in case.branches:
        uf.union(index[br.from_bus], index[br.to_bus])

    groups: dict[int, list[int]] = {}
    for i in range(len(bus_ids)):
        groups.setdefault(uf.find(i), []).append(i)
    super_root = uf.find(heads[0])
    order = [super_root] + sorted((r for r in groups if r != super_root), key=lambda r: groups[r][0])
    nodes = tuple(tuple(bus_ids[i] for i in groups[r]) for r in order)
    node_of = {bus: n for n, members in enumerate(nodes) for bus in members}
    return nodes, node_of


def reduce(case: NetworkCase) -> ReducedGraph:
    nodes, node_of = _contract(case)
    edges = tuple(
        (sw.id, node_of[sw.from_bus], node_of[sw.to_bus]) for sw in sorted(case.switches, key=lambda s: s.id)
    )
    raw = ReducedGraph(nodes, edges)
    fixed_open, groups = classify_degenerate(raw)
    kept = tuple(e for e in edges if e[0] not in fixed_open)
    return replace(raw, edges=kept, fixed_open=fixed_open, cycle_groups=groups)


def classify_degenerate(reduced: ReducedGraph) -> tuple[frozenset[str], tuple[frozenset[str], ...]]:
    """Return (self-loop switches, switch sets forming the fundamental cycles).

    Cycles come from a BFS spanning tree rooted at the super node; each edge
    outside the tree closes exactly one cycle together with the tree path
    between its endpoints. Parallel switches give 2-cycles.
    """
    fixed_open = frozenset(s for s, a, b in reduced.edges if a == b)
    live = [e for e in reduced.edges if e[0] not in fixed_open]

    adj: dict[int, list[tuple[str, int]]] = {n: [] for n in range(reduced.n_nodes)}
    for s, a, b in live:
        adj[a].append((s, b))
        adj[b].append((s, a))

    parent: dict[int, tuple[int, str] | None] = {}
    tree_edges = set()
    for root in range(reduced.n_nodes):
        if root in parent:
            continue
        parent[root] = None
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for s, v in adj[u]:
                if v not in parent:
                    parent[v] = (u, s)
                    tree_edges.add(s)
                    queue.append(v)

    def path_to_root(n: int) -> list[tuple[int, str]]:
        out = []
        while parent[n] is not None:
            p, s = parent[n]
            out.append((n, s))
            n = p
        out.append((n, ""))
        return out

    groups = []
    for s, a, b in live:
        if s in tree_edges:
            continue
        pa, pb = path_to_root(a), path_to_root(b)
        nodes_b = {n for n, _ in pb}
        cycle = {s}
        lca = None
        for n, e in pa:
            if n in nodes_b:
                lca = n
                break
            cycle.add(e)
        for n, e in pb:
            if n == lca:
                break
            cycle.add(e)
        groups.append(frozenset(cycle))
    return fixed_open, tuple(groups)
