import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dnr import data, kernels  # noqa: E402
from dnr.network import case_from_dict, load_case, load_profiles  # noqa: E402


def make_case(buses, branches=(), switches=(), loads=(), generators=(), heads=("S",), base_mva=1.0):
    """Compact case builder: branches/switches are (id, from, to[, r, x])."""
    doc = {
        "base_mva": base_mva,
        "buses": [{"id": b, "is_feeder_head": b in heads} for b in buses],
        "branches": [
            {"id": br[0], "from": br[1], "to": br[2], "r": br[3] if len(br) > 3 else 0.01,
             "x": br[4] if len(br) > 4 else 0.005}
            for br in branches
        ],
        "switches": [{"id": s[0], "from": s[1], "to": s[2]} for s in switches],
        "loads": [{"id": f"ld{i}", "bus": b, "profile_key": k} for i, (b, k) in enumerate(loads)],
        "generators": [{"id": f"g{i}", "bus": b, "profile_key": k} for i, (b, k) in enumerate(generators)],
    }
    return case_from_dict(doc)


@pytest.fixture(scope="session")
def simple_case():
    return load_case(data.path("simple_case.json"))


@pytest.fixture(scope="session")
def spanish_case():
    return load_case(data.path("spanish_like.json"))


@pytest.fixture(scope="session")
def spanish_profiles():
    return load_profiles(data.path("spanish_like_profiles.csv"))


@pytest.fixture(scope="session")
def simple_profiles():
    return load_profiles(data.path("simple_profiles.csv"))


@pytest.fixture(scope="session")
def triangle_case():
    # three switch-free regions joined pairwise by switches
    return make_case(
        ["S", "n1", "n2"],
        switches=[("t1", "S", "n1"), ("t2", "n1", "n2"), ("t3", "n2", "S")],
        loads=[("n1", "p"), ("n2", "p")],
    )


@pytest.fixture(scope="session")
def spanish_run(spanish_case, spanish_profiles):
    """Radial set, grid and merit tables for the 96-step Spanish-like fixture."""
    from dnr.pipeline import evaluate_all, stage_radial
    from dnr.powerflow import run_grid

    reduced, radial = stage_radial(spanish_case)
    grid = run_grid(spanish_case, radial, spanish_profiles, jobs=1)
    start, tables, escape = evaluate_all(grid, radial)
    return {"reduced": reduced, "radial": radial, "grid": grid, "start": start, "tables": tables, "escape": escape}


@pytest.fixture(scope="session")
def simple_run(simple_case, simple_profiles):
    from dnr.pipeline import evaluate_all, stage_radial
    from dnr.powerflow import run_grid

    reduced, radial = stage_radial(simple_case)
    grid = run_grid(simple_case, radial, simple_profiles, jobs=1)
    start, tables, escape = evaluate_all(grid, radial)
    return {"reduced": reduced, "radial": radial, "grid": grid, "start": start, "tables": tables, "escape": escape}


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]
