"""Operational objectives: network losses and voltage-band violations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CaseValidationError, NumericalError

EXTREME_DEV = 0.10
OBJECTIVES = ("losses", "violations")


@dataclass(frozen=True, eq=False)
class ObjectiveGrid:
    """Per-cell results indexed ``[config, timestep]``.

    ``losses`` is in MW; infeasible (non-converged) cells hold +inf in
    ``losses`` and -1 in ``violations``.
    """

    switch_order: tuple[str, ...]
    config_bits: tuple[str, ...]
    losses: np.ndarray
    violations: np.ndarray
    infeasible: np.ndarray
    extreme: np.ndarray
    min_v: np.ndarray
    max_v: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.losses.shape

    @property
    def n_configs(self) -> int:
        return self.losses.shape[0]

    @property
    def n_timesteps(self) -> int:
        return self.losses.shape[1]

    def values(self, objective: str) -> np.ndarray:
        """Float matrix for path optimization; infeasible cells are +inf."""
        if objective == "losses":
            out = self.losses.astype(float, copy=True)
        elif objective == "violations":
            out = self.violations.astype(float)
        else:
            raise ValueError(f"unknown objective {objective!r}")
        out[self.infeasible] = np.inf
        return out

    def with_extreme_dev(self, dev: float) -> ObjectiveGrid:
        ext = ((self.max_v - 1.0 > dev) | (1.0 - self.min_v > dev)) & ~self.infeasible
        meta = dict(self.meta, extreme_dev=dev)
        return ObjectiveGrid(
            self.switch_order, self.config_bits, self.losses, self.violations,
            self.infeasible, ext, self.min_v, self.max_v, meta,
        )


def _require_converged(sol) -> None:
    if not sol.converged:
        raise NumericalError("objective requested for a non-converged solution", code="not_converged")


def compute_losses(sol, case) -> float:
    """Total generation minus total load in MW, slack injections counted as generation."""
    _require_converged(sol)
    return float(np.sum(sol.s_bus.real)) * case.base_mva


def branch_losses_pu(sol, net) -> float:
    """Sum of I^2 r over series elements (independent of the injection balance)."""
    _require_converged(sol)
    index = net.case.bus_index()
    v = sol.v
    total = 0.0
    for br in net.effective_branches():
        if br.r == 0.0:
            continue
        i_series = (v[index[br.from_bus]] - v[index[br.to_bus]]) / complex(br.r, br.x)
        total += abs(i_series) ** 2 * br.r
    return total


def count_violations(sol, vmin: Sequence[float], vmax: Sequence[float]) -> int:
    """Buses strictly outside [vmin, vmax]; each bus counts at most once."""
    _require_converged(sol)
    vm = np.asarray(sol.vm)
    return int(np.count_nonzero((vm < np.asarray(vmin)) | (vm > np.asarray(vmax))))


def is_extreme(sol, dev: float = EXTREME_DEV) -> bool:
    _require_converged(sol)
    return bool(np.any(np.abs(np.asarray(sol.vm) - 1.0) > dev))


def reduction_pct(static_total: float, dynamic_total: float) -> float:
    if not static_total > 0:
        raise CaseValidationError("static baseline total must be positive", code="zero_static_baseline")
    return 100.0 * (static_total - dynamic_total) / static_total
