"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--switches 18] [--repeat 3] [--out results.json]

Checks that both backends return identical results before timing them.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from dnr import kernels


def random_switch_graph(rng, n_nodes, n_edges):
    eu, ev = [], []
    for i in range(1, n_nodes):
        eu.append(int(rng.integers(0, i)))
        ev.append(i)
    while len(eu) < n_edges:
        a, b = rng.integers(0, n_nodes, size=2)
        if a != b:
            eu.append(int(a))
            ev.append(int(b))
    return eu, ev


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--switches", type=int, default=18)
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--configs", type=int, default=200, help="rows of the synthetic objective grid")
    p.add_argument("--timesteps", type=int, default=96)
    p.add_argument("--cases", type=int, default=500, help="path optimisations per timing")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    eu, ev = random_switch_graph(rng, args.nodes, args.switches)
    values = rng.integers(0, 50, size=(args.configs, args.timesteps)).astype(float)
    infeasible = rng.random(values.shape) < 0.02
    values[infeasible] = np.inf
    reach_sets = [np.sort(rng.choice(args.configs, size=int(rng.integers(1, args.configs)), replace=False))
                  for _ in range(args.cases)]
    for r in reach_sets:
        infeasible[r[0]] = False
        values[r[0]] = np.where(np.isinf(values[r[0]]), 49.0, values[r[0]])

    backends = kernels.available_backends()
    results = {"sweep": {}, "path_argmin": {}, "params": vars(args)}
    reference = {}
    for name, mod in sorted(backends.items()):
        t_sweep, (masks, stats) = best_of(lambda: mod.sweep_radial(args.nodes, eu, ev, [], False), args.repeat)

        def paths():
            return [mod.path_argmin(values, infeasible, r.astype(np.int64)) for r in reach_sets]

        t_path, out = best_of(paths, args.repeat)
        digest = (list(masks), [(list(map(int, pth)), int(bad)) for pth, bad in out])
        reference.setdefault("value", digest)
        if digest != reference["value"]:
            raise SystemExit(f"backend {name} disagrees with {sorted(backends)[0]}")
        results["sweep"][name] = t_sweep
        results["path_argmin"][name] = t_path
        print(f"{name:>7s}: radial sweep 2^{args.switches} = {t_sweep:8.4f} s ({stats['radial']} radial), "
              f"{args.cases} path optimisations = {t_path:8.4f} s")

    if "cython" in backends:
        for key in ("sweep", "path_argmin"):
            results[f"{key}_speedup"] = results[key]["python"] / results[key]["cython"]
        print(f"speed-up: sweep {results['sweep_speedup']:.1f}x, path {results['path_argmin_speedup']:.1f}x")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
