"""Exhaustive radial-configuration enumeration on the reduced switch graph."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import kernels
from ._pykernels import _adjacency, loop_search
from .errors import TooManySwitchesError
from .network import Configuration
from .reduction import ReducedGraph

MAX_SWITCHES = 30


@dataclass(frozen=True)
class RadialSet:
    switch_order: tuple[str, ...]
    masks: tuple[int, ...]
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def configs(self) -> list[Configuration]:
        return [Configuration.from_mask(self.switch_order, m) for m in self.masks]

    def __len__(self) -> int:
        return len(self.masks)

    def index_of(self, cfg: Configuration) -> int:
        return self.masks.index(cfg.mask)

    def bit_strings(self) -> list[str]:
        return [Configuration.from_mask(self.switch_order, m).bits for m in self.masks]


def _mask(cfg: Configuration | int) -> int:
    return cfg if isinstance(cfg, int) else cfg.mask


def count_check(cfg: Configuration | int, g: ReducedGraph) -> bool:
    return bin(_mask(cfg)).count("1") == g.n_nodes - 1


def loop_check(cfg: Configuration | int, g: ReducedGraph) -> tuple[bool, frozenset[int]]:
    """Path search from the super node; fails as soon as a node is reached twice."""
    adj = _adjacency(g.n_nodes, [e[1] for e in g.edges], [e[2] for e in g.edges])
    ok, visited = loop_search(adj, _mask(cfg))
    return ok, frozenset(visited)


def connectivity_check(visited, g: ReducedGraph) -> bool:
    return set(visited) == set(range(g.n_nodes))


def is_radial(cfg: Configuration | int, g: ReducedGraph) -> bool:
    if not count_check(cfg, g):
        return False
    ok, visited = loop_check(cfg, g)
    return ok and connectivity_check(visited, g)


def enumerate_radial(g: ReducedGraph, prune: bool = True) -> RadialSet:
    """All radial configurations of ``g`` in ascending bit-vector order."""
    n = len(g.edges)
    if n > MAX_SWITCHES:
        raise TooManySwitchesError(
            f"{n} switches exceed the exhaustive-search limit of {MAX_SWITCHES}", n_switches=n
        )
    eu = [e[1] for e in g.edges]
    ev = [e[2] for e in g.edges]
    masks, stats = kernels.sweep_radial(g.n_nodes, eu, ev, g.group_masks(), prune)
    stats = dict(stats)
    stats["pruning"] = bool(prune)
    stats["backend"] = kernels.BACKEND
    return RadialSet(g.switch_order, tuple(sorted(masks)), stats)
