"""End-to-end pipeline: radial -> flow -> evaluate -> report, plus manifest and benchmark."""

from __future__ import annotations

import hashlib
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import io as dio
from .errors import CaseValidationError, DnrError
from .network import NetworkCase, load_case, load_profiles
from .objectives import EXTREME_DEV, OBJECTIVES, ObjectiveGrid
from .powerflow import MAX_ITER, TOLERANCE, default_jobs, run_grid
from .radial import RadialSet, enumerate_radial
from .reduction import ReducedGraph, reduce
from .replacement import (
    build_merit_tables,
    enumerate_cases,
    evaluate_cases,
    extreme_violation_escape,
    reachable_configs,
    select_start_config,
)

log = logging.getLogger(__name__)

STAGES = ("radial", "power_flow", "evaluation")
ARTIFACTS = ("configs.json", "grid.json", "merit.json", "heatmaps/losses.csv", "heatmaps/violations.csv")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# --- stages ---------------------------------------------------------------------


def stage_radial(case: NetworkCase, prune: bool = True) -> tuple[ReducedGraph, RadialSet]:
    reduced = reduce(case)
    return reduced, enumerate_radial(reduced, prune=prune)


_EVAL_STATE: dict = {}


def _init_eval(state):
    _EVAL_STATE.clear()
    _EVAL_STATE.update(state)


def _eval_chunk(args):
    obj, chunk = args
    st = _EVAL_STATE
    return obj, evaluate_cases(st["grid"], st["radial"], chunk, obj, st["start"], st["timestep_hours"])


def evaluate_all(
    grid: ObjectiveGrid,
    radial: RadialSet,
    objectives: Sequence[str] = OBJECTIVES,
    timestep_hours: float = 0.25,
    jobs: int = 1,
):
    """Start configuration, merit tables and extreme-violation escape report."""
    start = select_start_config(grid)
    cases = enumerate_cases(radial.switch_order)
    evaluations = None
    if jobs > 1 and len(cases) > 1:
        n_chunks = min(jobs * 4, len(cases))
        chunks = [cases[i::n_chunks] for i in range(n_chunks)]
        state = {"grid": grid, "radial": radial, "start": start, "timestep_hours": timestep_hours}
        evaluations = {obj: [] for obj in objectives}
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_eval, initargs=(state,)) as ex:
            for obj, evs in ex.map(_eval_chunk, [(o, ch) for o in objectives for ch in chunks]):
                evaluations[obj].extend(evs)
    tables = build_merit_tables(
        grid, radial, cases, objectives, timestep_hours, start=start, evaluations=evaluations
    )
    everything = np.arange(len(radial))
    escape = {
        "threshold": grid.meta.get("extreme_dev", EXTREME_DEV),
        "static": extreme_violation_escape(grid, [start]),
        "all_reconfigurable": extreme_violation_escape(grid, everything),
        "merit_winners": {},
    }
    for obj, table in tables.items():
        escape["merit_winners"][obj] = {
            str(row.k): extreme_violation_escape(
                grid, reachable_configs(row.evaluation.case, radial.masks[start], radial)
            )
            for row in table.rows
        }
    return start, tables, escape


# --- manifest ---------------------------------------------------------------------


def _settings(jobs, timestep_hours, objectives, extreme_dev, prune):
    return {
        "tolerance": TOLERANCE,
        "max_iter": MAX_ITER,
        "timestep_hours": timestep_hours,
        "objectives": list(objectives),
        "extreme_dev": extreme_dev,
        "cycle_group_pruning": prune,
        "jobs": jobs,
    }


def verify_manifest(out_dir) -> dict[str, bool]:
    """Recompute every digest recorded in ``manifest.json``; returns path -> matches."""
    out_dir = Path(out_dir)
    manifest = dio.read_json(out_dir / "manifest.json")
    result = {}
    for section in ("inputs", "artifacts"):
        for name, entry in manifest.get(section, {}).items():
            path = Path(entry["path"])
            if not path.is_absolute() and section == "artifacts":
                path = out_dir / path
            result[name] = path.exists() and sha256_file(path) == entry["sha256"]
    return result


def run_pipeline(
    case_path,
    profiles_path,
    out_dir,
    jobs: int | None = None,
    timestep_hours: float = 0.25,
    objectives: Sequence[str] = OBJECTIVES,
    extreme_dev: float = EXTREME_DEV,
    prune: bool = True,
    full: bool = False,
    dump_reduced: bool = False,
) -> dict:
    """Run every stage, writing artifacts and ``manifest.json`` into ``out_dir``.

    A failing stage still leaves a partial manifest naming the stage and error.
    """
    jobs = default_jobs() if jobs is None else max(1, jobs)
    out_dir = Path(out_dir)
    (out_dir / "heatmaps").mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "dnr",
        "version": __version__,
        "inputs": {
            "case": {"path": str(case_path), "sha256": sha256_file(case_path)},
            "profiles": {"path": str(profiles_path), "sha256": sha256_file(profiles_path)},
        },
        "settings": _settings(jobs, timestep_hours, objectives, extreme_dev, prune),
        "durations_s": {},
        "artifacts": {},
    }
    stage = "input"
    try:
        case = load_case(case_path)
        profiles = load_profiles(profiles_path)

        stage = "radial"
        t0 = time.perf_counter()
        reduced, radial = stage_radial(case, prune)
        names = {sw.id: sw.label for sw in case.switches}
        dio.write_json(out_dir / "configs.json", dio.configs_to_dict(radial, reduced, names))
        if dump_reduced:
            dio.write_json(out_dir / "reduced.json", reduced.to_dict())
        manifest["durations_s"]["radial"] = time.perf_counter() - t0
        log.info("radial: %d of %d configurations", len(radial), radial.stats.get("candidates"))

        stage = "power_flow"
        t0 = time.perf_counter()
        grid = run_grid(case, radial, profiles, jobs=jobs, extreme_dev=extreme_dev)
        dio.write_json(out_dir / "grid.json", dio.grid_to_dict(grid))
        manifest["durations_s"]["power_flow"] = time.perf_counter() - t0

        stage = "evaluation"
        t0 = time.perf_counter()
        start, tables, escape = evaluate_all(grid, radial, objectives, timestep_hours, jobs)
        doc = dio.merit_to_dict(tables, grid, start, names, timestep_hours, escape, full)
        dio.write_json(out_dir / "merit.json", doc)
        dio.write_heatmaps(grid, out_dir / "heatmaps")
        manifest["durations_s"]["evaluation"] = time.perf_counter() - t0
    except DnrError as exc:
        manifest["error"] = {"stage": stage, "code": exc.code, "message": str(exc)}
        dio.write_json(out_dir / "manifest.json", manifest)
        raise

    for name in ARTIFACTS + (("reduced.json",) if dump_reduced else ()):
        manifest["artifacts"][name] = {"path": name, "sha256": sha256_file(out_dir / name)}
    dio.write_json(out_dir / "manifest.json", manifest)
    return manifest


def bench(case_path, profiles_path, repetitions: int, out_dir, jobs: int | None = None, **kwargs) -> dict:
    """Repeat the pipeline and summarise per-stage wall-clock times."""
    if repetitions < 1:
        raise CaseValidationError("repetitions must be at least 1", code="invalid_value")
    runs = []
    for i in range(repetitions):
        m = run_pipeline(case_path, profiles_path, Path(out_dir) / f"rep{i:03d}", jobs=jobs, **kwargs)
        runs.append(m["durations_s"])
    summary = {}
    for stage in STAGES:
        xs = [r[stage] for r in runs]
        summary[stage] = {"mean": statistics.fmean(xs), "min": min(xs), "max": max(xs)}
    means = {s: summary[s]["mean"] for s in STAGES}
    return {
        "repetitions": repetitions,
        "stages": summary,
        "power_flow_dominates": max(means, key=means.get) == "power_flow",
    }
