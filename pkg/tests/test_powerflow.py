import numpy as np
import pytest

from conftest import make_case
from oracles import dense_ybus, gauss_seidel_two_bus, ohmic_losses, residual

from dnr.errors import CaseValidationError, DnrError, NonConvergenceError, NoSlackError
from dnr.network import Configuration, ProfileSet, apply_configuration
from dnr.objectives import compute_losses, count_violations
from dnr.powerflow import injection_matrix, run_grid, solve_ac
from dnr.radial import enumerate_radial
from dnr.reduction import reduce

Z = complex(0.01, 0.05)
S_LOAD = complex(0.5, 0.2)


@pytest.fixture(scope="module")
def two_bus():
    case = make_case(["S", "L"], branches=[("b", "S", "L", Z.real, Z.imag)], loads=[("L", "p")])
    net = apply_configuration(case, Configuration((), ()))
    return case, net


def test_zero_injection_is_flat(spanish_case):
    ids = sorted(s.id for s in spanish_case.switches)
    net = apply_configuration(spanish_case, Configuration.from_bits(ids, "1010111"))
    sol = solve_ac(net, np.zeros(len(spanish_case.buses), dtype=complex))
    assert sol.converged and sol.iterations <= 1
    assert np.all(sol.vm == 1.0) and np.all(sol.va == 0.0)
    assert all(abs(s) == 0 for s in sol.slack_injection.values())


def test_two_bus_against_fixed_point(two_bus):
    case, net = two_bus
    sol = solve_ac(net, np.array([0, -S_LOAD]))
    v2 = gauss_seidel_two_bus(Z, S_LOAD, tol=1e-10)
    assert abs(sol.v[1] - v2) <= 1e-6
    assert sol.vm[0] == 1.0 and sol.va[0] == 0.0
    # slack supplies the load plus the ohmic loss computed from the oracle voltage
    i = (1.0 - v2) / Z
    assert abs(sol.slack_injection["S"].real - (S_LOAD.real + abs(i) ** 2 * Z.real)) <= 1e-6
    assert abs(compute_losses(sol, case) - abs(i) ** 2 * Z.real) <= 1e-8


def test_two_bus_from_profiles(two_bus):
    case, _ = two_bus
    # 500 kW at pf 0.95 on a 1 MVA base
    inj = injection_matrix(case, ProfileSet(("p",), np.array([[500.0]])))
    q = 0.5 * np.tan(np.arccos(0.95))
    assert np.allclose(inj[0], [0, -(0.5 + 1j * q)])


def test_generator_sign_and_pf():
    case = make_case(["S", "G"], branches=[("b", "S", "G")], generators=[("G", "pv")])
    inj = injection_matrix(case, ProfileSet(("pv",), np.array([[250.0]])))
    assert inj[0, 1] == pytest.approx(0.25 + 0j)


def test_missing_profile_key(two_bus):
    case, _ = two_bus
    with pytest.raises(CaseValidationError) as exc:
        injection_matrix(case, ProfileSet(("other",), np.zeros((1, 1))))
    assert exc.value.code == "missing_profile_key"


def test_residual_and_balance_on_fixture(spanish_case, spanish_profiles):
    inj = injection_matrix(spanish_case, spanish_profiles)
    ids = sorted(s.id for s in spanish_case.switches)
    for bits in ("1010111", "1111100", "0101111"):
        net = apply_configuration(spanish_case, Configuration.from_bits(ids, bits))
        y = dense_ybus(spanish_case, net.closed_switches)
        heads = [i for i, b in enumerate(spanish_case.buses) if b.is_feeder_head]
        pq = np.setdiff1d(np.arange(len(spanish_case.buses)), heads)
        for t in (0, 30, 48, 60, 95):
            sol = solve_ac(net, inj[t])
            assert residual(y, sol.v, inj[t])[pq].max() <= 1e-8
            p_slack = sum(s.real for s in sol.slack_injection.values())
            losses = ohmic_losses(spanish_case, net.closed_switches, sol.v)
            assert abs(p_slack - (-inj[t].real.sum() + losses)) <= 1e-6
            assert np.all(sol.vm[heads] == 1.0) and np.all(sol.va[heads] == 0.0)
            assert compute_losses(sol, spanish_case) >= 0


def test_non_convergence_carries_details(two_bus):
    _, net = two_bus
    # far beyond the maximum transferable power of the line
    with pytest.raises(NonConvergenceError) as exc:
        solve_ac(net, np.array([0, -50.0 - 20j]))
    assert exc.value.code == "non_convergence"
    assert exc.value.exit_code == 3
    assert exc.value.details["iterations"] >= 1


def test_island_without_slack(simple_case):
    ids = [s.id for s in simple_case.switches]
    net = apply_configuration(simple_case, Configuration.from_closed(ids, {"sw1"}))
    with pytest.raises(NoSlackError) as exc:
        solve_ac(net, np.zeros(len(simple_case.buses), dtype=complex))
    assert exc.value.code == "no_slack_in_island"


def test_multiple_islands_solved_independently():
    case = make_case(
        ["F1", "a", "F2", "b"],
        branches=[("l1", "F1", "a"), ("l2", "F2", "b")],
        switches=[("tie", "a", "b")],
        loads=[("a", "p"), ("b", "p")],
        heads=("F1", "F2"),
    )
    net = apply_configuration(case, Configuration(("tie",), (False,)))
    sol = solve_ac(net, np.array([0, -0.1, 0, -0.1], dtype=complex))
    assert sol.vm[1] == pytest.approx(sol.vm[3], abs=1e-12)
    assert set(sol.slack_injection) == {"F1", "F2"}


def test_grid_shape(spanish_run):
    grid = spanish_run["grid"]
    assert grid.shape == (14, 96)
    assert not grid.infeasible.any()
    assert np.all(grid.losses >= 0)
    assert grid.meta["tolerance"] == 1e-8 and grid.meta["max_iter"] == 30


def test_zero_profiles(spanish_case):
    rs = enumerate_radial(reduce(spanish_case))
    keys = tuple(sorted(spanish_case.profile_keys()))
    grid = run_grid(spanish_case, rs, ProfileSet(keys, np.zeros((3, len(keys)))), jobs=1)
    assert np.all(np.abs(grid.losses) <= 1e-9)
    assert np.all(grid.violations == 0)


def test_single_cell_matches_direct_solve(spanish_case, spanish_profiles, spanish_run):
    rs, grid = spanish_run["radial"], spanish_run["grid"]
    inj = injection_matrix(spanish_case, spanish_profiles)
    vmin = [b.vmin for b in spanish_case.buses]
    vmax = [b.vmax for b in spanish_case.buses]
    for c, t in ((0, 0), (10, 48), (13, 95)):
        sol = solve_ac(apply_configuration(spanish_case, rs.configs[c]), inj[t])
        assert grid.losses[c, t] == compute_losses(sol, spanish_case)
        assert grid.violations[c, t] == count_violations(sol, vmin, vmax)
        assert grid.min_v[c, t] == sol.vm.min()


def test_single_config_grid(spanish_case, spanish_profiles, spanish_run):
    rs = spanish_run["radial"]
    one = type(rs)(rs.switch_order, rs.masks[3:4])
    sub = ProfileSet(spanish_profiles.keys, spanish_profiles.values[50:51])
    grid = run_grid(spanish_case, one, sub, jobs=1)
    assert grid.shape == (1, 1)
    assert grid.losses[0, 0] == spanish_run["grid"].losses[3, 50]


def test_grid_deterministic_across_workers(simple_case, simple_profiles):
    rs = enumerate_radial(reduce(simple_case))
    a = run_grid(simple_case, rs, simple_profiles, jobs=1)
    b = run_grid(simple_case, rs, simple_profiles, jobs=3)
    for field in ("losses", "violations", "infeasible", "min_v", "max_v"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_non_converged_cells_are_infeasible(two_bus):
    case, _ = two_bus
    rs = enumerate_radial(reduce(case))
    prof = ProfileSet(("p",), np.array([[100.0], [60000.0]]))
    grid = run_grid(case, rs, prof, jobs=1)
    assert list(grid.infeasible[0]) == [False, True]
    assert grid.losses[0, 1] == np.inf and grid.violations[0, 1] == -1


def test_empty_radial_set(two_bus):
    case, _ = two_bus
    rs = enumerate_radial(reduce(case))
    with pytest.raises(DnrError) as exc:
        run_grid(case, type(rs)(rs.switch_order, ()), ProfileSet(("p",), np.zeros((1, 1))))
    assert exc.value.code == "empty_radial_set"
