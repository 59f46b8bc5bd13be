import itertools
import random

import numpy as np
import pytest

from dnr.errors import DnrError, NoFeasibleConfigurationError
from dnr.network import Configuration
from dnr.objectives import ObjectiveGrid
from dnr.replacement import (
    ReplacementCase,
    build_merit_tables,
    enumerate_cases,
    evaluate_cases,
    extreme_violation_escape,
    optimize_path,
    reachable_configs,
    select_start_config,
    static_total,
)


def make_grid(losses, violations=None, infeasible=None, extreme=None, order=("a", "b")):
    losses = np.asarray(losses, dtype=float)
    n_c, n_t = losses.shape
    if violations is None:
        violations = np.zeros((n_c, n_t), dtype=np.int64)
    if infeasible is None:
        infeasible = np.zeros((n_c, n_t), dtype=bool)
    if extreme is None:
        extreme = np.zeros((n_c, n_t), dtype=bool)
    losses = np.where(infeasible, np.inf, losses)
    violations = np.where(infeasible, -1, np.asarray(violations, dtype=np.int64))
    bits = tuple(format(i, f"0{len(order)}b") for i in range(n_c))
    ones = np.ones((n_c, n_t))
    return ObjectiveGrid(tuple(order), bits, losses, violations, np.asarray(infeasible), np.asarray(extreme),
                         ones, ones, {"extreme_dev": 0.1})


# --- start configuration ----------------------------------------------------------


def test_start_pointwise_minimal_row():
    rng = np.random.default_rng(1)
    losses = rng.uniform(1, 2, size=(5, 8))
    losses[3] = 0.5
    assert select_start_config(make_grid(losses)) == 3


def test_start_tie_lowest_index():
    losses = [[2.5, 2.5], [1.0, 3.0], [3.0, 1.0]]
    assert select_start_config(make_grid(losses)) == 1


def test_start_skips_partially_infeasible_rows():
    losses = [[5.0, 5.0], [0.1, 0.1]]
    infeasible = [[False, False], [False, True]]
    assert select_start_config(make_grid(losses, infeasible=infeasible)) == 0
    with pytest.raises(DnrError) as exc:
        select_start_config(make_grid(losses, infeasible=[[True, False], [False, True]]))
    assert exc.value.code == "no_fully_feasible_configuration"


def test_start_on_fixture_matches_scan(spanish_run):
    grid = spanish_run["grid"]
    means = [sum(row) / len(row) for row in grid.losses.tolist()]
    assert spanish_run["start"] == min(range(len(means)), key=lambda i: (means[i], i))
    assert grid.config_bits[spanish_run["start"]] == "1010111"


# --- cases and reachability -------------------------------------------------------


def test_enumerate_cases_small():
    cases = enumerate_cases(3)
    assert [c.rs_set for c in cases] == [("1", "2"), ("1", "3"), ("2", "3"), ("1", "2", "3")]
    assert [c.id for c in cases] == [0, 1, 2, 3]


def test_enumerate_cases_counts():
    assert len(enumerate_cases(7)) == 120
    for n in range(2, 10):
        cases = enumerate_cases(n)
        assert len(cases) == 2 ** n - n - 1
        assert min(c.k for c in cases) == 2
    with pytest.raises(DnrError):
        enumerate_cases(1)


def test_reachable_simple_case(simple_run):
    rs = simple_run["radial"]
    start = Configuration.from_closed(rs.switch_order, {"sw1", "sw3"})
    idx = reachable_configs(ReplacementCase(0, ("sw1", "sw2")), start, rs)
    assert {frozenset(rs.configs[i].closed) for i in idx} == {frozenset({"sw1", "sw3"}), frozenset({"sw2", "sw3"})}


def test_reachable_all_switches_is_everything(spanish_run):
    rs = spanish_run["radial"]
    start = rs.masks[spanish_run["start"]]
    assert list(reachable_configs(rs.switch_order, start, rs)) == list(range(len(rs)))


def test_reachable_only_start_when_no_differing_bits(simple_run):
    rs = simple_run["radial"]
    start = Configuration.from_closed(rs.switch_order, {"sw3", "sw4"})
    # every other radial config differs on sw1 or sw2, both held manual here
    assert list(reachable_configs(("sw3", "sw4"), start, rs)) == [rs.index_of(start)]


def test_reachability_nesting(spanish_run):
    rs = spanish_run["radial"]
    start = rs.masks[spanish_run["start"]]
    cases = enumerate_cases(rs.switch_order)
    reach = {c.rs_set: set(reachable_configs(c, start, rs).tolist()) for c in cases}
    for a, b in itertools.combinations(cases, 2):
        if set(a.rs_set) <= set(b.rs_set):
            assert reach[a.rs_set] <= reach[b.rs_set]
        assert spanish_run["start"] in reach[a.rs_set]


# --- path optimisation --------------------------------------------------------------


def test_single_reachable_gives_constant_path():
    grid = make_grid([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
    ev = optimize_path(grid, "losses", [0], timestep_hours=1.0)
    assert ev.path == (0, 0, 0) and ev.total == 6.0 and ev.flips == 0


def test_timestep_hours_scales_losses_only():
    grid = make_grid([[1.0, 2.0]], violations=[[3, 4]])
    assert optimize_path(grid, "losses", [0], timestep_hours=0.25).total == 0.75
    assert optimize_path(grid, "violations", [0], timestep_hours=0.25).total == 7.0


def test_path_skips_infeasible_cells():
    grid = make_grid([[0.0, 0.0], [1.0, 1.0]], infeasible=[[False, True], [False, False]])
    ev = optimize_path(grid, "losses", [0, 1], timestep_hours=1.0)
    assert ev.path == (0, 1) and ev.flips == 1


def test_no_feasible_configuration_names_timestep():
    grid = make_grid([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]], infeasible=[[False, False, True], [False, False, True]])
    with pytest.raises(NoFeasibleConfigurationError) as exc:
        optimize_path(grid, "losses", [0, 1])
    assert exc.value.code == "no_feasible_configuration"
    assert exc.value.details["timestep"] == 2


def test_tie_keeps_previous_configuration():
    grid = make_grid([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]], violations=[[0, 0, 0], [0, 0, 0]])
    ev = optimize_path(grid, "losses", [0, 1], timestep_hours=1.0)
    # t0 picks 1 outright, later ties keep 1
    assert ev.path == (1, 1, 1) and ev.flips == 0
    ev = optimize_path(grid, "violations", [0, 1])
    assert ev.path == (0, 0, 0)


def test_fixture_all_switches_equals_column_minima(spanish_run):
    grid = spanish_run["grid"]
    ev = optimize_path(grid, "losses", range(grid.n_configs), timestep_hours=0.25)
    col_min = [min(grid.losses[c, t] for c in range(grid.n_configs)) for t in range(grid.n_timesteps)]
    assert ev.total == pytest.approx(0.25 * sum(col_min), rel=1e-12)


def test_random_path_optimality(spanish_run):
    grid, rs = spanish_run["grid"], spanish_run["radial"]
    start = spanish_run["start"]
    cases = enumerate_cases(rs.switch_order)
    rnd = random.Random(7)
    for obj in ("losses", "violations"):
        vals = grid.values(obj)
        for case in rnd.sample(cases, 25):
            reach = reachable_configs(case, rs.masks[start], rs)
            ev = optimize_path(grid, obj, reach)
            for t in range(grid.n_timesteps):
                assert vals[ev.path[t], t] == min(vals[c, t] for c in reach)
            assert ev.total <= static_total(grid, obj, start)


# --- merit tables ---------------------------------------------------------------------


def _check_monotone(tables):
    for table in tables.values():
        totals = [row.evaluation.total for row in table.rows]
        assert all(b <= a for a, b in zip(totals, totals[1:]))
        assert all(ev.total <= table.static_total for ev in table.evaluations)
        assert all(table.bound.total <= t for t in totals)


def test_merit_monotone_spanish(spanish_run):
    _check_monotone(spanish_run["tables"])


def test_merit_monotone_simple(simple_run):
    _check_monotone(simple_run["tables"])


def test_k_equals_n_matches_bound(spanish_run):
    for table in spanish_run["tables"].values():
        assert table.rows[-1].k == 7
        assert table.rows[-1].evaluation.total == table.bound.total


def test_spanish_k2_winner(spanish_run):
    for table in spanish_run["tables"].values():
        row = table.best(2)
        assert row.evaluation.case.rs_set == ("sw4", "sw7")
        assert row.reduction_pct > 0


def test_k2_winner_matches_exhaustive_oracle(spanish_run):
    grid, rs, start = spanish_run["grid"], spanish_run["radial"], spanish_run["start"]
    for obj, table in spanish_run["tables"].items():
        vals = grid.values(obj)
        scores = {}
        for pair in itertools.combinations(rs.switch_order, 2):
            reach = reachable_configs(pair, rs.masks[start], rs)
            scores[pair] = sum(min(vals[c, t] for c in reach) for t in range(grid.n_timesteps))
        best = min(scores, key=lambda p: (scores[p], p))
        assert table.best(2).evaluation.case.rs_set == best


def test_winner_tie_goes_to_smallest_rs_set():
    # identical rows: every case ties, so the lexicographically smallest set wins
    grid = make_grid(np.ones((3, 4)), order=("a", "b", "c"))
    from dnr.radial import RadialSet

    rs = RadialSet(("a", "b", "c"), (3, 5, 6))
    tables = build_merit_tables(grid, rs, start=0)
    assert tables["losses"].best(2).evaluation.case.rs_set == ("a", "b")
    assert tables["violations"].best(2).reduction_pct is None


def test_permuted_case_order_gives_identical_tables(spanish_run):
    grid, rs, start = spanish_run["grid"], spanish_run["radial"], spanish_run["start"]
    cases = enumerate_cases(rs.switch_order)
    shuffled = cases[:]
    random.Random(3).shuffle(shuffled)
    evals = {obj: evaluate_cases(grid, rs, shuffled, obj, start) for obj in ("losses", "violations")}
    a = spanish_run["tables"]
    b = build_merit_tables(grid, rs, cases, start=start, evaluations=evals)
    for obj in a:
        assert [r.evaluation for r in a[obj].rows] == [r.evaluation for r in b[obj].rows]
        assert [r.reduction_pct for r in a[obj].rows] == [r.reduction_pct for r in b[obj].rows]


def test_violations_never_increase_with_k(spanish_run):
    rows = spanish_run["tables"]["violations"].rows
    assert all(b.evaluation.total <= a.evaluation.total for a, b in zip(rows, rows[1:]))


# --- extreme escape -------------------------------------------------------------------


def test_escape_all_clear():
    grid = make_grid(np.ones((2, 3)))
    assert extreme_violation_escape(grid, [0, 1]) == {"passed": True, "failing_timesteps": []}


def test_escape_lists_failing_timestep():
    extreme = np.array([[False, True, False], [False, True, True]])
    grid = make_grid(np.ones((2, 3)), extreme=extreme)
    assert extreme_violation_escape(grid, [0, 1]) == {"passed": False, "failing_timesteps": [1]}
    assert extreme_violation_escape(grid, [1])["failing_timesteps"] == [1, 2]


def test_escape_on_fixture(spanish_run):
    assert spanish_run["escape"]["all_reconfigurable"]["passed"]
    assert spanish_run["escape"]["all_reconfigurable"]["failing_timesteps"] == []
