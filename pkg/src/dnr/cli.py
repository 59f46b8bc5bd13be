"""``dnr`` command line.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from pathlib import Path

from . import __version__
from . import io as dio
from .errors import CaseValidationError, DnrError
from .network import load_case, load_profiles
from .objectives import EXTREME_DEV, OBJECTIVES
from .pipeline import bench, evaluate_all, run_pipeline, stage_radial
from .powerflow import default_jobs, run_grid

log = logging.getLogger("dnr")


def _objectives(value: str) -> tuple[str, ...]:
    return OBJECTIVES if value == "both" else (value,)


def cmd_radial(args) -> None:
    case = load_case(args.case)
    reduced, radial = stage_radial(case, prune=not args.no_prune)
    names = {sw.id: sw.label for sw in case.switches}
    dio.write_json(args.out, dio.configs_to_dict(radial, reduced, names))
    if args.dump_reduced:
        dio.write_json(args.dump_reduced, reduced.to_dict())
    s = radial.stats
    print(f"{s['radial']} radial of {s['candidates']} configurations "
          f"({100.0 * (1 - s['radial'] / s['candidates']):.0f}% discarded)")


def cmd_flow(args) -> None:
    case = load_case(args.case)
    radial = dio.radial_from_dict(dio.read_json(args.configs))
    unknown = set(radial.switch_order) - {sw.id for sw in case.switches}
    if unknown:
        raise CaseValidationError(f"configs reference switches missing from the case: {sorted(unknown)}",
                       code="validation_error")
    profiles = load_profiles(args.profiles)
    grid = run_grid(case, radial, profiles, jobs=args.jobs, extreme_dev=args.extreme_dev)
    dio.write_json(args.out, dio.grid_to_dict(grid))
    print(f"{grid.n_configs} x {grid.n_timesteps} cells, {int(grid.infeasible.sum())} infeasible")


def cmd_evaluate(args) -> None:
    grid = dio.grid_from_dict(dio.read_json(args.grid))
    configs = dio.read_json(args.configs)
    radial = dio.radial_from_dict(configs)
    if tuple(radial.switch_order) != grid.switch_order or radial.bit_strings() != list(grid.config_bits):
        raise CaseValidationError("grid and configs describe different configuration sets", code="validation_error")
    if args.extreme_dev is not None:
        grid = grid.with_extreme_dev(args.extreme_dev)
    names = configs.get("switch_names", {})
    objectives = _objectives(args.objective)
    start, tables, escape = evaluate_all(grid, radial, objectives, args.timestep_hours, args.jobs)
    doc = dio.merit_to_dict(tables, grid, start, names, args.timestep_hours, escape, args.full)
    dio.write_json(args.out, doc)
    for obj, table in tables.items():
        print(f"[{obj}] static total {table.static_total:.6g}")
        for row in table.rows:
            red = "n/a" if row.reduction_pct is None else f"{row.reduction_pct:.2f}%"
            rs = ",".join(names.get(s, s) for s in row.evaluation.case.rs_set)
            print(f"  k={row.k}: {rs}  total={row.evaluation.total:.6g}  reduction={red}")


def cmd_report(args) -> None:
    grid = dio.grid_from_dict(dio.read_json(args.grid))
    for p in dio.write_heatmaps(grid, args.heatmaps):
        print(p)


def cmd_run(args) -> None:
    manifest = run_pipeline(
        args.case, args.profiles, args.out_dir, jobs=args.jobs, timestep_hours=args.timestep_hours,
        objectives=_objectives(args.objective), extreme_dev=args.extreme_dev, prune=not args.no_prune,
        full=args.full, dump_reduced=args.dump_reduced,
    )
    for stage, dt in manifest["durations_s"].items():
        print(f"{stage:>11s}: {dt:.3f} s")


def cmd_bench(args) -> None:
    if args.work_dir:
        summary = bench(args.case, args.profiles, args.repetitions, args.work_dir, jobs=args.jobs)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            summary = bench(args.case, args.profiles, args.repetitions, tmp, jobs=args.jobs)
    text = json.dumps(summary, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    if not summary["power_flow_dominates"]:
        log.info("power flow is not the dominant stage for this input")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dnr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"dnr {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def jobs(sp):
        sp.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default: $DNR_JOBS or CPU count)")

    sp = sub.add_parser("radial", help="enumerate radial switch configurations")
    sp.add_argument("--case", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--dump-reduced", metavar="PATH")
    sp.add_argument("--no-prune", action="store_true", help="disable cycle-group pruning")
    sp.set_defaults(func=cmd_radial)

    sp = sub.add_parser("flow", help="power flow over every radial configuration and timestep")
    sp.add_argument("--case", required=True)
    sp.add_argument("--configs", required=True)
    sp.add_argument("--profiles", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--extreme-dev", type=float, default=EXTREME_DEV)
    jobs(sp)
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("evaluate", help="rank reconfigurable-switch replacement cases")
    sp.add_argument("--grid", required=True)
    sp.add_argument("--configs", required=True)
    sp.add_argument("--objective", choices=("losses", "violations", "both"), default="both")
    sp.add_argument("--timestep-hours", type=float, default=0.25)
    sp.add_argument("--out", required=True)
    sp.add_argument("--full", action="store_true", help="include every case, not only the winners")
    sp.add_argument("--extreme-dev", type=float, default=None,
                    help="recompute extreme flags with this deviation (default: value stored in grid)")
    jobs(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("report", help="export heatmap CSVs from a grid")
    sp.add_argument("--grid", required=True)
    sp.add_argument("--heatmaps", required=True, metavar="DIR")
    sp.set_defaults(func=cmd_report)

    for name, helptext in (("run", "full pipeline"), ("bench", "repeat the pipeline and time each stage")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--case", required=True)
        sp.add_argument("--profiles", required=True)
        jobs(sp)
        if name == "run":
            sp.add_argument("--out-dir", required=True)
            sp.add_argument("--objective", choices=("losses", "violations", "both"), default="both")
            sp.add_argument("--timestep-hours", type=float, default=0.25)
            sp.add_argument("--extreme-dev", type=float, default=EXTREME_DEV)
            sp.add_argument("--full", action="store_true")
            sp.add_argument("--dump-reduced", action="store_true")
            sp.add_argument("--no-prune", action="store_true")
            sp.set_defaults(func=cmd_run)
        else:
            sp.add_argument("--repetitions", type=int, default=10)
            sp.add_argument("--work-dir", help="keep per-repetition artifacts here")
            sp.add_argument("--out", help="write the timing summary JSON here")
            sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", None) is None and hasattr(args, "jobs"):
        args.jobs = default_jobs()
    try:
        args.func(args)
    except DnrError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [io_error]: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
