"""Regenerate the bundled fixtures in src/dnr/data/.

simple_case      6 buses, 1 feeder, 4 switches; reduces to the 3-node multigraph
                 S={F,s1}, A={a1,a2}, B={b1,b2} with sw1,sw2: S-A, sw3: S-B, sw4: A-B.
spanish_like     138 buses, 7 switches, 3 PV generators, 3 feeders, one
                 commercial district with strong midday injection and four
                 residential districts. Switch graph after reduction:

                     S --sw1-- D2 --sw2-- D1
                     S --sw3-- D3 --sw4-- C --sw7-- D4 --sw5-- D1
                     S --sw6-- D1

Profiles are synthetic (seeded) 96-step days at 15-minute resolution, in kW.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "dnr" / "data"
T = 96


def _bell(t, centre, width):
    return np.exp(-0.5 * ((t - centre) / width) ** 2)


def residential_profiles(n: int, rng) -> dict[str, np.ndarray]:
    t = np.arange(T)
    out = {}
    for i in range(n):
        shift = rng.uniform(-3, 3)
        base = 0.35 + 0.1 * rng.random()
        morning = 1.2 * _bell(t, 30 + shift, 3)
        evening = 3.0 * _bell(t, 76 + shift, 5)
        noise = 0.25 * rng.random(T)
        out[f"res_{i + 1}"] = np.round(base + morning + evening + noise, 4)
    return out


def commercial_profiles(rng, load_kw, pv_kw) -> dict[str, np.ndarray]:
    t = np.arange(T)
    occupancy = 1.0 / (1.0 + np.exp(-(t - 32) / 2.0)) * 1.0 / (1.0 + np.exp((t - 80) / 2.0))
    load = load_kw * (0.35 + 0.65 * occupancy)
    pv = pv_kw * np.clip(np.sin(math.pi * (t - 26) / 52), 0, None) ** 1.5
    return {"com_net": np.round(load - pv + 0.2 * rng.random(T), 4)}


def pv_profile(pv_kw) -> dict[str, np.ndarray]:
    t = np.arange(T)
    return {"pv_res": np.round(pv_kw * np.clip(np.sin(math.pi * (t - 26) / 52), 0, None) ** 1.5, 4)}


def write_profiles(path: Path, cols: dict[str, np.ndarray]) -> None:
    keys = list(cols)
    lines = ["timestep," + ",".join(keys)]
    for step in range(T):
        lines.append(",".join([str(step)] + [repr(float(cols[k][step])) for k in keys]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_case(path: Path, case: dict) -> None:
    path.write_text(json.dumps(case, indent=2) + "\n", encoding="utf-8")


def simple_case() -> dict:
    buses = [{"id": b, "vmin": 0.95, "vmax": 1.05, "is_feeder_head": b == "F"}
             for b in ("F", "s1", "a1", "a2", "b1", "b2")]
    branches = [
        {"id": "L_s", "from": "F", "to": "s1", "r": 0.01, "x": 0.005, "b": 0.0},
        {"id": "L_a", "from": "a1", "to": "a2", "r": 0.02, "x": 0.01, "b": 0.0},
        {"id": "L_b", "from": "b1", "to": "b2", "r": 0.02, "x": 0.01, "b": 0.0},
    ]
    switches = [
        {"id": "sw1", "from": "F", "to": "a1", "name": "SW1"},
        {"id": "sw2", "from": "s1", "to": "a2", "name": "SW2"},
        {"id": "sw3", "from": "F", "to": "b1", "name": "SW3"},
        {"id": "sw4", "from": "a2", "to": "b2", "name": "SW4"},
    ]
    loads = [
        {"id": f"ld_{b}", "bus": b, "profile_key": key, "power_factor": 0.95}
        for b, key in (("s1", "res_1"), ("a1", "res_1"), ("a2", "res_2"), ("b1", "res_1"), ("b2", "res_2"))
    ]
    return {"base_mva": 1.0, "buses": buses, "branches": branches, "switches": switches,
            "loads": loads, "generators": []}


class _Builder:
    def __init__(self):
        self.buses, self.branches, self.loads, self.gens = [], [], [], []

    def bus(self, bid, head=False):
        self.buses.append({"id": bid, "vmin": 0.95, "vmax": 1.05, "is_feeder_head": head})
        return bid

    def line(self, a, b, r, x):
        self.branches.append({"id": f"L{len(self.branches) + 1:03d}", "from": a, "to": b,
                              "r": round(r, 6), "x": round(x, 6), "b": 0.0})

    def load(self, bus, key, pf=0.95):
        self.loads.append({"id": f"ld_{bus}", "bus": bus, "profile_key": key, "power_factor": pf})

    def feeder(self, prefix, root, n, r, x, keys, trunk_every=4):
        """Radial cable: a trunk with short laterals; every bus carries a load."""
        ids = []
        trunk_prev = root
        for i in range(n):
            bid = self.bus(f"{prefix}{i + 1:02d}")
            if i % trunk_every == trunk_every - 1 and ids:
                self.line(ids[-1], bid, r * 0.6, x * 0.6)
            else:
                self.line(trunk_prev, bid, r, x)
                trunk_prev = bid
            self.load(bid, keys[i % len(keys)])
            ids.append(bid)
        return ids, trunk_prev


SPANISH_PARAMS = {
    "r_feeder": 0.013,
    "r_d1": 0.0081,
    "r_d2": 0.016,
    "r_d3": 0.0172,
    "r_d4": 0.0125,
    "r_c": 0.004,
    "com_load_kw": 7.0981,
    "com_pv_kw": 12.8329,
    "pv_kw": 33.6129,
    "res_scale": 0.815,
    "n_d3": 29,
    "n_d4": 13,
}


def spanish_like(**overrides) -> tuple[dict, dict[str, np.ndarray]]:
    p = {**SPANISH_PARAMS, **overrides}
    rng = np.random.default_rng(20240601)
    res = {k: np.round(v * p["res_scale"], 4) for k, v in residential_profiles(8, rng).items()}
    profiles = {**res, **commercial_profiles(rng, p["com_load_kw"], p["com_pv_kw"]), **pv_profile(p["pv_kw"])}
    keys = list(res)

    b = _Builder()
    # feeders in the super node; 3 heads + 8 local buses each
    ends = {}
    rf = p["r_feeder"]
    for f, (r, x) in {"F1": (rf, rf * 0.6), "F2": (rf, rf * 0.6), "F3": (rf * 1.2, rf * 0.7)}.items():
        b.bus(f, head=True)
        ids, end = b.feeder(f"{f}_", f, 8, r, x, keys[:4])
        ends[f] = end

    # residential districts; D3 long and evening-heavy, D4 short and PV-rich
    d1, d1_end = b.feeder("D1_", b.bus("D1_00"), 21, p["r_d1"], p["r_d1"] / 2, keys[4:])
    d2, d2_end = b.feeder("D2_", b.bus("D2_00"), 21, p["r_d2"], p["r_d2"] / 2, keys[2:6])
    d3, d3_end = b.feeder("D3_", b.bus("D3_00"), p["n_d3"], p["r_d3"], p["r_d3"] / 2, keys)
    d4, d4_end = b.feeder("D4_", b.bus("D4_00"), p["n_d4"], p["r_d4"], p["r_d4"] / 2, keys[1:5])
    for head in ("D1_00", "D2_00", "D3_00", "D4_00"):
        b.load(head, keys[0])
    # commercial district, 23 buses
    c, c_end = b.feeder("C_", b.bus("C_00"), 22, p["r_c"], p["r_c"] / 2, ["com_net"], trunk_every=3)
    b.load("C_00", "com_net")

    for i, bus in enumerate(("D4_04", "D4_08", "D4_12")):
        b.gens.append({"id": f"pv{i + 1}", "bus": bus, "profile_key": "pv_res", "power_factor": 1.0})

    switches = [
        {"id": "sw1", "from": ends["F1"], "to": "D2_00", "name": "SW1"},
        {"id": "sw2", "from": d2_end, "to": "D1_00", "name": "SW2"},
        {"id": "sw3", "from": ends["F2"], "to": "D3_00", "name": "SW3"},
        {"id": "sw4", "from": d3_end, "to": "C_00", "name": "SW4"},
        {"id": "sw5", "from": d4_end, "to": d1_end, "name": "SW5"},
        {"id": "sw6", "from": ends["F3"], "to": "D1_00", "name": "SW6"},
        {"id": "sw7", "from": c_end, "to": "D4_00", "name": "SW7"},
    ]
    case = {"base_mva": 1.0, "buses": b.buses, "branches": b.branches, "switches": switches,
            "loads": b.loads, "generators": b.gens}
    return case, profiles


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    write_case(DATA / "simple_case.json", simple_case())
    rng = np.random.default_rng(7)
    write_profiles(DATA / "simple_profiles.csv", residential_profiles(2, rng))
    write_profiles(DATA / "flat.csv", {"res_1": np.full(T, 1.5), "res_2": np.full(T, 1.0)})
    case, profiles = spanish_like()
    write_case(DATA / "spanish_like.json", case)
    write_profiles(DATA / "spanish_like_profiles.csv", profiles)


if __name__ == "__main__":
    main()
