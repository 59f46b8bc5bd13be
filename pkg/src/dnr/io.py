"""On-disk artifact formats: configs.json, grid.json, merit.json and heatmap CSVs."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import CaseParseError
from .objectives import ObjectiveGrid
from .radial import RadialSet
from .reduction import ReducedGraph


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def write_json(path: str | os.PathLike, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path: str | os.PathLike):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"{path}: malformed JSON: {exc}") from exc


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


# --- configs.json ---------------------------------------------------------------


def configs_to_dict(radial: RadialSet, reduced: ReducedGraph, switch_names: dict[str, str]) -> dict:
    stats = {k: v for k, v in radial.stats.items() if k != "backend"}
    return {
        "switch_order": list(radial.switch_order),
        "switch_names": {s: switch_names.get(s, s) for s in radial.switch_order},
        "configs": radial.bit_strings(),
        "fixed_open": sorted(reduced.fixed_open),
        "stats": stats,
    }


def radial_from_dict(doc: dict) -> RadialSet:
    try:
        order = tuple(doc["switch_order"])
        masks = []
        for bits in doc["configs"]:
            if len(bits) != len(order) or set(bits) - {"0", "1"}:
                raise CaseParseError(f"bad configuration bit string {bits!r}")
            masks.append(sum(int(c) << i for i, c in enumerate(bits)))
    except (KeyError, TypeError) as exc:
        raise CaseParseError(f"configs document is missing fields: {exc}") from exc
    return RadialSet(order, tuple(masks), dict(doc.get("stats", {})))


# --- grid.json ------------------------------------------------------------------


def grid_to_dict(grid: ObjectiveGrid) -> dict:
    cells = []
    n_c, n_t = grid.shape
    for c in range(n_c):
        for t in range(n_t):
            bad = bool(grid.infeasible[c, t])
            cells.append(
                {
                    "config_index": c,
                    "timestep": t,
                    "losses_mw": None if bad else float(grid.losses[c, t]),
                    "violations": None if bad else int(grid.violations[c, t]),
                    "infeasible": bad,
                    "extreme": bool(grid.extreme[c, t]),
                    "min_v": None if bad else _finite_or_none(grid.min_v[c, t]),
                    "max_v": None if bad else _finite_or_none(grid.max_v[c, t]),
                }
            )
    meta = dict(grid.meta)
    meta.update(
        n_configs=n_c,
        n_timesteps=n_t,
        switch_order=list(grid.switch_order),
        configs=list(grid.config_bits),
    )
    return {"meta": meta, "cells": cells}


def grid_from_dict(doc: dict) -> ObjectiveGrid:
    try:
        meta = dict(doc["meta"])
        n_c, n_t = int(meta.pop("n_configs")), int(meta.pop("n_timesteps"))
        order = tuple(meta.pop("switch_order"))
        bits = tuple(meta.pop("configs"))
        losses = np.full((n_c, n_t), np.inf)
        viol = np.full((n_c, n_t), -1, dtype=np.int64)
        infeasible = np.ones((n_c, n_t), dtype=bool)
        extreme = np.zeros((n_c, n_t), dtype=bool)
        min_v = np.full((n_c, n_t), np.nan)
        max_v = np.full((n_c, n_t), np.nan)
        seen = np.zeros((n_c, n_t), dtype=bool)
        for cell in doc["cells"]:
            c, t = cell["config_index"], cell["timestep"]
            seen[c, t] = True
            if cell["infeasible"]:
                continue
            infeasible[c, t] = False
            losses[c, t] = cell["losses_mw"]
            viol[c, t] = cell["violations"]
            extreme[c, t] = cell.get("extreme", False)
            min_v[c, t] = cell["min_v"]
            max_v[c, t] = cell["max_v"]
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise CaseParseError(f"grid document is malformed: {exc}") from exc
    if not seen.all():
        raise CaseParseError("grid document is incomplete")
    return ObjectiveGrid(order, bits, losses, viol, infeasible, extreme, min_v, max_v, meta)


# --- heatmaps ---------------------------------------------------------------------


def heatmap_csv(grid: ObjectiveGrid, objective: str) -> str:
    """Config rows x timestep columns; infeasible cells are left empty."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["config", *range(grid.n_timesteps)])
    for c, bits in enumerate(grid.config_bits):
        row = []
        for t in range(grid.n_timesteps):
            if grid.infeasible[c, t]:
                row.append("")
            elif objective == "losses":
                row.append(repr(float(grid.losses[c, t])))
            else:
                row.append(str(int(grid.violations[c, t])))
        writer.writerow([bits, *row])
    return out.getvalue()


def write_heatmaps(grid: ObjectiveGrid, out_dir: str | os.PathLike) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for obj in ("losses", "violations"):
        p = out_dir / f"{obj}.csv"
        p.write_text(heatmap_csv(grid, obj), encoding="utf-8")
        paths.append(p)
    return paths


# --- merit.json -----------------------------------------------------------------


def _evaluation_dict(ev, names: dict[str, str], grid: ObjectiveGrid, with_path: bool) -> dict:
    d = {
        "rs_set": [names.get(s, s) for s in ev.case.rs_set],
        "total": ev.total,
        "flips": ev.flips,
        "reachable_count": ev.reachable_count,
    }
    if with_path:
        d["path"] = list(ev.path)
    return d


def merit_to_dict(
    tables: dict,
    grid: ObjectiveGrid,
    start: int,
    names: dict[str, str],
    timestep_hours: float,
    escape: dict,
    full: bool = False,
) -> dict:
    doc = {
        "start_config": {"index": start, "bits": grid.config_bits[start]},
        "switch_order": list(grid.switch_order),
        "timestep_hours": timestep_hours,
        "units": {"losses": "MWh", "violations": "bus-timesteps"},
        "objectives": {},
        "extreme_escape": escape,
    }
    for obj, table in tables.items():
        entry = {
            "static_total": table.static_total,
            "merit_order": [
                {
                    "k": row.k,
                    **_evaluation_dict(row.evaluation, names, grid, with_path=True),
                    "reduction_pct": row.reduction_pct,
                    "delta_reduction_pct": row.delta_pct,
                }
                for row in table.rows
            ],
            "fully_dynamic": {
                **_evaluation_dict(table.bound, names, grid, with_path=True),
                "reduction_pct": table.bound_reduction_pct,
            },
        }
        if full:
            entry["cases"] = [
                {"case_id": ev.case.id, **_evaluation_dict(ev, names, grid, with_path=False)}
                for ev in table.evaluations
            ]
        doc["objectives"][obj] = entry
    return doc
