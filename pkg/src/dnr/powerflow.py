"""AC power flow (polar Newton-Raphson) and the configuration x timestep sweep."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CaseValidationError, NonConvergenceError, NoSlackError
from .network import Configuration, NetworkCase, OperationalNetwork, ProfileSet, apply_configuration
from .objectives import EXTREME_DEV, ObjectiveGrid, compute_losses, count_violations

TOLERANCE = 1e-8
MAX_ITER = 30


@dataclass(frozen=True, eq=False)
class PowerFlowSolution:
    vm: np.ndarray
    va: np.ndarray
    s_bus: np.ndarray  # net complex injection per bus (p.u.), slack entries solved
    slack_injection: dict
    converged: bool
    iterations: int
    max_mismatch: float

    @property
    def v(self) -> np.ndarray:
        return self.vm * np.exp(1j * self.va)


def injection_matrix(case: NetworkCase, profiles: ProfileSet) -> np.ndarray:
    """Complex per-bus injections (p.u.) for every timestep, shape (T, n_bus).

    Loads inject -P - jP*tan(acos(pf)); generators inject +P + jP*tan(acos(pf)).
    Profile values are kW.
    """
    missing = sorted(case.profile_keys() - set(profiles.keys))
    if missing:
        raise CaseValidationError(f"profiles lack keys {missing}", code="missing_profile_key", keys=missing)
    index = case.bus_index()
    scale = 1.0 / (1000.0 * case.base_mva)
    s = np.zeros((profiles.n_timesteps, len(case.buses)), dtype=complex)
    for items, sign in ((case.loads, -1.0), (case.generators, 1.0)):
        for item in items:
            p = profiles.column(item.profile_key) * scale
            q = p * math.tan(math.acos(item.power_factor))
            s[:, index[item.bus]] += sign * (p + 1j * q)
    return s


def admittance_matrix(n_bus: int, branches, index: dict[str, int]) -> np.ndarray:
    y = np.zeros((n_bus, n_bus), dtype=complex)
    for br in branches:
        f, t = index[br.from_bus], index[br.to_bus]
        ys = 1.0 / complex(br.r, br.x)
        ysh = 0.5j * br.b
        y[f, f] += ys + ysh
        y[t, t] += ys + ysh
        y[f, t] -= ys
        y[t, f] -= ys
    return y


def _newton(y, s, pq, tol, max_iter):
    """Solve one island; slack buses (everything not in ``pq``) stay at 1.0 p.u., 0 rad."""
    n = len(s)
    vm = np.ones(n)
    va = np.zeros(n)
    v = vm.astype(complex)
    npq = len(pq)
    for it in range(max_iter + 1):
        mis = v * np.conj(y @ v) - s
        norm = float(np.max(np.abs(mis[pq]))) if npq else 0.0
        if not math.isfinite(norm):
            break
        if norm <= tol:
            return v, it, norm, True
        if it == max_iter:
            break
        ibus = y @ v
        vnorm = v / np.abs(v)
        ds_dvm = v[:, None] * np.conj(y * vnorm[None, :])
        ds_dvm[np.diag_indices(n)] += np.conj(ibus) * vnorm
        ds_dva = -1j * v[:, None] * np.conj(y * v[None, :])
        ds_dva[np.diag_indices(n)] += 1j * v * np.conj(ibus)
        a = ds_dva[np.ix_(pq, pq)]
        m = ds_dvm[np.ix_(pq, pq)]
        jac = np.block([[a.real, m.real], [a.imag, m.imag]])
        f = np.concatenate([mis[pq].real, mis[pq].imag])
        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        va[pq] += dx[:npq]
        vm[pq] += dx[npq:]
        v = vm * np.exp(1j * va)
    return v, it, norm, False


def _island_indices(net: OperationalNetwork, index: dict[str, int]):
    out = []
    for isl in net.islands:
        if not isl.feeder_heads:
            raise NoSlackError(f"island containing {isl.buses[0]} has no feeder head", buses=list(isl.buses))
        buses = [index[b] for b in isl.buses]
        heads = set(isl.feeder_heads)
        pq = np.array([k for k, b in enumerate(isl.buses) if b not in heads], dtype=int)
        out.append((np.array(buses, dtype=int), pq, isl.feeder_heads))
    return out


class _Solver:
    """Precomputed admittance and island split for one operational network."""

    def __init__(self, net: OperationalNetwork, tol: float = TOLERANCE, max_iter: int = MAX_ITER):
        self.net = net
        self.tol = tol
        self.max_iter = max_iter
        index = net.case.bus_index()
        self.n_bus = len(index)
        y = admittance_matrix(self.n_bus, net.effective_branches(), index)
        self.islands = [
            (buses, pq, heads, y[np.ix_(buses, buses)]) for buses, pq, heads in _island_indices(net, index)
        ]

    def solve(self, inj: np.ndarray) -> PowerFlowSolution:
        inj = np.asarray(inj, dtype=complex)
        if inj.shape != (self.n_bus,) or not np.all(np.isfinite(inj)):
            raise CaseValidationError("injection vector must be finite with one entry per bus", code="invalid_injection")
        vm = np.ones(self.n_bus)
        va = np.zeros(self.n_bus)
        s_bus = inj.copy()
        slack = {}
        iters = 0
        worst = 0.0
        for buses, pq, heads, y in self.islands:
            v, it, mis, ok = _newton(y, inj[buses], pq, self.tol, self.max_iter)
            iters = max(iters, it)
            worst = max(worst, mis)
            if not ok:
                raise NonConvergenceError(it, mis)
            vm[buses] = np.abs(v)
            va[buses] = np.angle(v)
            slack_mask = np.ones(len(buses), dtype=bool)
            slack_mask[pq] = False
            vm[buses[slack_mask]] = 1.0
            va[buses[slack_mask]] = 0.0
            s_isl = v * np.conj(y @ v)
            s_bus[buses[slack_mask]] = s_isl[slack_mask]
            slack[heads[0]] = complex(np.sum(s_isl[slack_mask]))
        return PowerFlowSolution(vm, va, s_bus, slack, True, iters, worst)


def solve_ac(
    net: OperationalNetwork, inj: np.ndarray, tol: float = TOLERANCE, max_iter: int = MAX_ITER
) -> PowerFlowSolution:
    """Newton-Raphson from flat start, each island against its own feeder head.

    Raises :class:`NonConvergenceError` when an island misses ``tol`` within
    ``max_iter`` iterations and :class:`NoSlackError` for islands without a
    feeder head.
    """
    return _Solver(net, tol, max_iter).solve(inj)


# --- grid sweep -----------------------------------------------------------------

_WORKER_STATE: dict = {}


def _init_worker(state):
    _WORKER_STATE.clear()
    _WORKER_STATE.update(state)


def _solve_row(c: int):
    st = _WORKER_STATE
    case: NetworkCase = st["case"]
    cfg = Configuration.from_mask(st["switch_order"], st["masks"][c])
    solver = _Solver(apply_configuration(case, cfg), st["tol"], st["max_iter"])
    inj = st["inj"]
    vmin = np.array([b.vmin for b in case.buses])
    vmax = np.array([b.vmax for b in case.buses])
    n_t = inj.shape[0]
    losses = np.full(n_t, np.inf)
    viol = np.full(n_t, -1, dtype=np.int64)
    infeasible = np.zeros(n_t, dtype=bool)
    min_v = np.full(n_t, np.nan)
    max_v = np.full(n_t, np.nan)
    for t in range(n_t):
        try:
            sol = solver.solve(inj[t])
        except NonConvergenceError:
            infeasible[t] = True
            continue
        losses[t] = compute_losses(sol, case)
        viol[t] = count_violations(sol, vmin, vmax)
        min_v[t] = sol.vm.min()
        max_v[t] = sol.vm.max()
    return c, losses, viol, infeasible, min_v, max_v


def default_jobs() -> int:
    env = os.environ.get("DNR_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_grid(
    case: NetworkCase,
    radial,
    profiles: ProfileSet,
    jobs: int | None = None,
    tol: float = TOLERANCE,
    max_iter: int = MAX_ITER,
    extreme_dev: float = EXTREME_DEV,
) -> ObjectiveGrid:
    """Solve every (radial configuration, timestep) cell and collect objective values."""
    if len(radial) == 0:
        raise CaseValidationError("radial set is empty", code="empty_radial_set")
    state = {
        "case": case,
        "switch_order": tuple(radial.switch_order),
        "masks": tuple(radial.masks),
        "inj": injection_matrix(case, profiles),
        "tol": tol,
        "max_iter": max_iter,
    }
    n_c, n_t = len(radial.masks), profiles.n_timesteps
    losses = np.empty((n_c, n_t))
    viol = np.empty((n_c, n_t), dtype=np.int64)
    infeasible = np.empty((n_c, n_t), dtype=bool)
    min_v = np.empty((n_c, n_t))
    max_v = np.empty((n_c, n_t))

    jobs = default_jobs() if jobs is None else max(1, jobs)
    if jobs == 1 or n_c == 1:
        _init_worker(state)
        results = [_solve_row(c) for c in range(n_c)]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, n_c), initializer=_init_worker, initargs=(state,)) as ex:
            results = list(ex.map(_solve_row, range(n_c)))
    for c, lo, vi, inf, mn, mx in results:
        losses[c], viol[c], infeasible[c], min_v[c], max_v[c] = lo, vi, inf, mn, mx

    extreme = ((max_v - 1.0 > extreme_dev) | (1.0 - min_v > extreme_dev)) & ~infeasible
    meta = {
        "tolerance": tol,
        "max_iter": max_iter,
        "extreme_dev": extreme_dev,
        "base_mva": case.base_mva,
    }
    return ObjectiveGrid(
        tuple(radial.switch_order), tuple(radial.bit_strings()), losses, viol, infeasible, extreme, min_v, max_v, meta
    )
