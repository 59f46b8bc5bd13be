"""Rank manual-to-reconfigurable switch replacements over a solved objective grid."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import CaseValidationError, DnrError, NoFeasibleConfigurationError, NumericalError
from .network import Configuration
from .objectives import OBJECTIVES, ObjectiveGrid, reduction_pct
from .radial import RadialSet


@dataclass(frozen=True)
class ReplacementCase:
    id: int
    rs_set: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.rs_set)


@dataclass(frozen=True)
class CaseEvaluation:
    case: ReplacementCase | None
    objective_name: str
    path: tuple[int, ...]
    total: float
    flips: int
    reachable_count: int


@dataclass
class MeritRow:
    k: int
    evaluation: CaseEvaluation
    reduction_pct: float | None
    delta_pct: float | None = None  # gain over the best case with k - 1 switches


@dataclass
class MeritTable:
    objective: str
    static_total: float
    rows: list[MeritRow]
    bound: CaseEvaluation
    bound_reduction_pct: float | None
    evaluations: list[CaseEvaluation] = field(default_factory=list)

    def best(self, k: int) -> MeritRow:
        return next(r for r in self.rows if r.k == k)


def select_start_config(grid: ObjectiveGrid) -> int:
    """Configuration with the lowest mean losses among fully feasible rows (ties: lowest index)."""
    feasible_rows = ~grid.infeasible.any(axis=1)
    if not feasible_rows.any():
        raise NumericalError("no configuration is feasible at every timestep", code="no_fully_feasible_configuration")
    means = np.where(feasible_rows, grid.losses.mean(axis=1), np.inf)
    return int(np.argmin(means))


def enumerate_cases(switch_ids: Sequence[str] | int, k_min: int = 2) -> list[ReplacementCase]:
    """All switch subsets with at least ``k_min`` members, ordered by size then lexicographically."""
    if isinstance(switch_ids, int):
        switch_ids = [str(i + 1) for i in range(switch_ids)]
    ids = tuple(switch_ids)
    if len(ids) < 2:
        raise CaseValidationError("need at least two switches to form a replacement case", code="too_few_switches")
    out = []
    for k in range(max(k_min, 2), len(ids) + 1):
        for combo in itertools.combinations(ids, k):
            out.append(ReplacementCase(len(out), combo))
    return out


def reachable_configs(case: ReplacementCase | Iterable[str], start, radial: RadialSet) -> np.ndarray:
    """Indices of radial configurations matching ``start`` on every manual switch.

    ``start`` is a :class:`Configuration` or its bit mask.
    """
    rs_set = case.rs_set if isinstance(case, ReplacementCase) else tuple(case)
    start_mask = start.mask if isinstance(start, Configuration) else int(start)
    pos = {s: i for i, s in enumerate(radial.switch_order)}
    free = 0
    for s in rs_set:
        free |= 1 << pos[s]
    fixed = ((1 << len(radial.switch_order)) - 1) & ~free
    arr = np.asarray(radial.masks, dtype=np.int64)
    return np.flatnonzero(((arr ^ start_mask) & fixed) == 0).astype(np.int64)


def optimize_path(
    grid: ObjectiveGrid,
    objective: str,
    reachable: Sequence[int],
    timestep_hours: float = 0.25,
    case: ReplacementCase | None = None,
    values: np.ndarray | None = None,
) -> CaseEvaluation:
    """Per-timestep argmin over reachable feasible configurations.

    Losses totals are energies (MWh, via ``timestep_hours``); violation totals are counts.
    """
    reachable = np.sort(np.asarray(reachable, dtype=np.int64))
    if reachable.size == 0:
        raise CaseValidationError("reachable set is empty", code="empty_reachable_set")
    if values is None:
        values = grid.values(objective)
    path, bad_t = kernels.path_argmin(values, grid.infeasible, reachable)
    if bad_t >= 0:
        raise NoFeasibleConfigurationError(int(bad_t))
    per_step = values[path, np.arange(len(path))]
    total = float(np.sum(per_step))
    if objective == "losses":
        total *= timestep_hours
    flips = int(np.count_nonzero(path[1:] != path[:-1]))
    return CaseEvaluation(case, objective, tuple(int(p) for p in path), total, flips, int(reachable.size))


def static_total(grid: ObjectiveGrid, objective: str, start: int, timestep_hours: float = 0.25) -> float:
    row = grid.values(objective)[start]
    total = float(np.sum(row))
    return total * timestep_hours if objective == "losses" else total


def _safe_reduction(static: float, dynamic: float) -> float | None:
    try:
        return reduction_pct(static, dynamic)
    except DnrError:
        return None


def evaluate_cases(
    grid: ObjectiveGrid,
    radial: RadialSet,
    cases: Sequence[ReplacementCase],
    objective: str,
    start: int,
    timestep_hours: float = 0.25,
) -> list[CaseEvaluation]:
    values = grid.values(objective)
    out = []
    for case in cases:
        reach = reachable_configs(case, radial.masks[start], radial)
        out.append(optimize_path(grid, objective, reach, timestep_hours, case, values))
    return out


def build_merit_tables(
    grid: ObjectiveGrid,
    radial: RadialSet,
    cases: Sequence[ReplacementCase] | None = None,
    objectives: Sequence[str] = OBJECTIVES,
    timestep_hours: float = 0.25,
    start: int | None = None,
    evaluations: dict[str, list[CaseEvaluation]] | None = None,
) -> dict[str, MeritTable]:
    """Best replacement set for every size k, per objective.

    ``evaluations`` may carry precomputed per-case results (e.g. from a worker pool);
    they are re-sorted by case id so the tables never depend on evaluation order.
    """
    if start is None:
        start = select_start_config(grid)
    if cases is None:
        cases = enumerate_cases(grid.switch_order)
    tables = {}
    for obj in objectives:
        if evaluations is not None and obj in evaluations:
            evals = sorted(evaluations[obj], key=lambda e: e.case.id)
        else:
            evals = evaluate_cases(grid, radial, cases, obj, start, timestep_hours)
        base = static_total(grid, obj, start, timestep_hours)
        best: dict[int, CaseEvaluation] = {}
        for ev in evals:
            k = ev.case.k
            cur = best.get(k)
            if cur is None or ev.total < cur.total or (ev.total == cur.total and ev.case.rs_set < cur.case.rs_set):
                best[k] = ev
        rows = []
        prev = None
        for k in sorted(best):
            red = _safe_reduction(base, best[k].total)
            delta = None if prev is None or red is None or prev.reduction_pct is None else red - prev.reduction_pct
            row = MeritRow(k, best[k], red, delta)
            rows.append(row)
            prev = row
        all_rs = ReplacementCase(-1, tuple(grid.switch_order))
        bound = optimize_path(grid, obj, np.arange(grid.n_configs), timestep_hours, all_rs)
        tables[obj] = MeritTable(obj, base, rows, bound, _safe_reduction(base, bound.total), evals)
    return tables


def extreme_violation_escape(grid: ObjectiveGrid, reachable: Sequence[int]) -> dict:
    """Timesteps at which no reachable configuration avoids extreme voltage deviation."""
    reachable = np.asarray(reachable, dtype=np.int64)
    ok_cells = ~grid.extreme[reachable] & ~grid.infeasible[reachable]
    failing = [int(t) for t in np.flatnonzero(~ok_cells.any(axis=0))]
    return {"passed": not failing, "failing_timesteps": failing}
