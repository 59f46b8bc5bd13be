"""Network model: case types, JSON case ingestion, profiles and switch application."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import CaseParseError, CaseValidationError

DEFAULT_VMIN = 0.95
DEFAULT_VMAX = 1.05
DEFAULT_LOAD_PF = 0.95
DEFAULT_GEN_PF = 1.0

# Closed switches are realised as near-ideal ties.
SWITCH_R = 0.0
SWITCH_X = 1e-5


@dataclass(frozen=True)
class Bus:
    id: str
    vmin: float = DEFAULT_VMIN
    vmax: float = DEFAULT_VMAX
    is_feeder_head: bool = False


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: str
    to_bus: str
    r: float
    x: float
    b: float = 0.0


@dataclass(frozen=True)
class Switch:
    id: str
    from_bus: str
    to_bus: str
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or self.id


@dataclass(frozen=True)
class Load:
    id: str
    bus: str
    profile_key: str
    power_factor: float = DEFAULT_LOAD_PF


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    profile_key: str
    power_factor: float = DEFAULT_GEN_PF


@dataclass(frozen=True)
class NetworkCase:
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    switches: tuple[Switch, ...] = ()
    loads: tuple[Load, ...] = ()
    generators: tuple[Generator, ...] = ()

    def bus_index(self) -> dict[str, int]:
        return {bus.id: i for i, bus in enumerate(self.buses)}

    @property
    def feeder_heads(self) -> tuple[str, ...]:
        return tuple(bus.id for bus in self.buses if bus.is_feeder_head)

    def switch_by_id(self) -> dict[str, Switch]:
        return {sw.id: sw for sw in self.switches}

    def profile_keys(self) -> set[str]:
        return {ld.profile_key for ld in self.loads} | {g.profile_key for g in self.generators}


@dataclass(frozen=True)
class Configuration:
    """Open/closed state per switch; ``states[i]`` belongs to ``switch_ids[i]`` (1 = closed)."""

    switch_ids: tuple[str, ...]
    states: tuple[int, ...]

    def __post_init__(self):
        if len(self.switch_ids) != len(self.states):
            raise ValueError("switch_ids and states differ in length")

    @classmethod
    def from_mask(cls, switch_ids: Sequence[str], mask: int) -> Configuration:
        return cls(tuple(switch_ids), tuple((mask >> i) & 1 for i in range(len(switch_ids))))

    @classmethod
    def from_bits(cls, switch_ids: Sequence[str], bits: str) -> Configuration:
        if len(bits) != len(switch_ids) or set(bits) - {"0", "1"}:
            raise ValueError(f"bad configuration bit string {bits!r}")
        return cls(tuple(switch_ids), tuple(int(c) for c in bits))

    @classmethod
    def from_closed(cls, switch_ids: Sequence[str], closed: Iterable[str]) -> Configuration:
        closed = set(closed)
        return cls(tuple(switch_ids), tuple(int(s in closed) for s in switch_ids))

    @property
    def mask(self) -> int:
        return sum(s << i for i, s in enumerate(self.states))

    @property
    def bits(self) -> str:
        """Character ``i`` is the state of ``switch_ids[i]``."""
        return "".join(str(s) for s in self.states)

    @property
    def closed(self) -> frozenset[str]:
        return frozenset(sid for sid, s in zip(self.switch_ids, self.states) if s)


@dataclass(frozen=True)
class Island:
    buses: tuple[str, ...]
    feeder_heads: tuple[str, ...]
    has_load: bool

    @property
    def slack(self) -> str | None:
        return self.feeder_heads[0] if self.feeder_heads else None

    @property
    def flagged(self) -> bool:
        return not self.feeder_heads or not self.has_load


@dataclass(frozen=True)
class OperationalNetwork:
    case: NetworkCase
    closed_switches: frozenset[str]
    islands: tuple[Island, ...]

    def effective_branches(self) -> list[Branch]:
        """Case branches plus one near-zero-impedance branch per closed switch."""
        out = list(self.case.branches)
        for sw in self.case.switches:
            if sw.id in self.closed_switches:
                out.append(Branch(sw.id, sw.from_bus, sw.to_bus, SWITCH_R, SWITCH_X, 0.0))
        return out


@dataclass(frozen=True)
class ProfileSet:
    """Per-key time series in kW; negative values are net injections."""

    keys: tuple[str, ...]
    values: np.ndarray = field(compare=False)  # shape (T, len(keys))

    @property
    def n_timesteps(self) -> int:
        return int(self.values.shape[0])

    def column(self, key: str) -> np.ndarray:
        return self.values[:, self.keys.index(key)]

    def __eq__(self, other):
        return (
            isinstance(other, ProfileSet)
            and self.keys == other.keys
            and np.array_equal(self.values, other.values)
        )


class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        # deterministic root choice
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


# --- JSON case format -------------------------------------------------------

_BUS_KEYS = {"id", "vmin", "vmax", "is_feeder_head"}
_BRANCH_KEYS = {"id", "from", "to", "r", "x", "b"}
_SWITCH_KEYS = {"id", "from", "to", "name"}
_INJ_KEYS = {"id", "bus", "profile_key", "power_factor"}
_TOP_KEYS = {"base_mva", "buses", "branches", "switches", "loads", "generators"}


def _check_keys(obj, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise CaseValidationError(f"{where}: expected an object", code="invalid_value", where=where)
    unknown = set(obj) - allowed
    if unknown:
        raise CaseValidationError(
            f"{where}: unknown keys {sorted(unknown)}", code="unknown_key", where=where, keys=sorted(unknown)
        )
    missing = required - set(obj)
    if missing:
        raise CaseValidationError(
            f"{where}: missing keys {sorted(missing)}", code="missing_field", where=where, keys=sorted(missing)
        )


def _str_id(value, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise CaseValidationError(f"{where}: ids must be non-empty strings", code="invalid_value", where=where)
    return value


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise CaseValidationError(f"{where}: expected a finite number", code="invalid_value", where=where)
    return float(value)


def case_from_dict(doc: Mapping) -> NetworkCase:
    _check_keys(doc, _TOP_KEYS, {"base_mva", "buses", "branches"}, "case")
    for key in _TOP_KEYS - {"base_mva"}:
        if key in doc and not isinstance(doc[key], list):
            raise CaseValidationError(f"case.{key}: expected a list", code="invalid_value", where=key)

    buses = []
    for i, raw in enumerate(doc["buses"]):
        where = f"buses[{i}]"
        _check_keys(raw, _BUS_KEYS, {"id"}, where)
        fh = raw.get("is_feeder_head", False)
        if not isinstance(fh, bool):
            raise CaseValidationError(f"{where}.is_feeder_head: expected boolean", code="invalid_value")
        buses.append(
            Bus(
                _str_id(raw["id"], where),
                _number(raw.get("vmin", DEFAULT_VMIN), where),
                _number(raw.get("vmax", DEFAULT_VMAX), where),
                fh,
            )
        )
    branches = []
    for i, raw in enumerate(doc["branches"]):
        where = f"branches[{i}]"
        _check_keys(raw, _BRANCH_KEYS, {"id", "from", "to", "r", "x"}, where)
        branches.append(
            Branch(
                _str_id(raw["id"], where),
                _str_id(raw["from"], where),
                _str_id(raw["to"], where),
                _number(raw["r"], where),
                _number(raw["x"], where),
                _number(raw.get("b", 0.0), where),
            )
        )
    switches = []
    for i, raw in enumerate(doc.get("switches", [])):
        where = f"switches[{i}]"
        _check_keys(raw, _SWITCH_KEYS, {"id", "from", "to"}, where)
        name = raw.get("name", "")
        if not isinstance(name, str):
            raise CaseValidationError(f"{where}.name: expected string", code="invalid_value")
        switches.append(
            Switch(_str_id(raw["id"], where), _str_id(raw["from"], where), _str_id(raw["to"], where), name)
        )

    def injections(key, cls, default_pf):
        out = []
        for i, raw in enumerate(doc.get(key, [])):
            where = f"{key}[{i}]"
            _check_keys(raw, _INJ_KEYS, {"id", "bus", "profile_key"}, where)
            out.append(
                cls(
                    _str_id(raw["id"], where),
                    _str_id(raw["bus"], where),
                    _str_id(raw["profile_key"], where),
                    _number(raw.get("power_factor", default_pf), where),
                )
            )
        return tuple(out)

    case = NetworkCase(
        base_mva=_number(doc["base_mva"], "base_mva"),
        buses=tuple(buses),
        branches=tuple(branches),
        switches=tuple(switches),
        loads=injections("loads", Load, DEFAULT_LOAD_PF),
        generators=injections("generators", Generator, DEFAULT_GEN_PF),
    )
    validate_case(case)
    return case


def validate_case(case: NetworkCase) -> None:
    """Check every case invariant, raising :class:`CaseValidationError` on the first violation."""

    def fail(code, msg, **details):
        raise CaseValidationError(msg, code=code, **details)

    if case.base_mva <= 0:
        fail("invalid_value", "base_mva must be positive")
    bus_ids = [b.id for b in case.buses]
    if not bus_ids:
        fail("no_buses", "case has no buses")
    for kind, items in (
        ("bus", case.buses),
        ("branch", case.branches),
        ("switch", case.switches),
        ("load", case.loads),
        ("generator", case.generators),
    ):
        seen = set()
        for item in items:
            if item.id in seen:
                fail("duplicate_id", f"duplicate {kind} id {item.id!r}", kind=kind, id=item.id)
            seen.add(item.id)
    known = set(bus_ids)
    for bus in case.buses:
        if not 0 < bus.vmin < bus.vmax:
            fail("bad_voltage_bounds", f"bus {bus.id}: need 0 < vmin < vmax", id=bus.id)
    for br in case.branches:
        for end in (br.from_bus, br.to_bus):
            if end not in known:
                fail("dangling_bus_ref", f"branch {br.id} references unknown bus {end!r}", id=br.id, bus=end)
        if br.from_bus == br.to_bus:
            fail("self_loop_branch", f"branch {br.id} connects bus {br.from_bus} to itself", id=br.id)
        if br.r == 0 and br.x == 0:
            fail("zero_impedance", f"branch {br.id} has zero impedance", id=br.id)
        if br.r < 0:
            fail("invalid_value", f"branch {br.id} has negative resistance", id=br.id)
    for sw in case.switches:
        for end in (sw.from_bus, sw.to_bus):
            if end not in known:
                fail("dangling_bus_ref", f"switch {sw.id} references unknown bus {end!r}", id=sw.id, bus=end)
    for item in case.loads + case.generators:
        if item.bus not in known:
            fail("dangling_bus_ref", f"{item.id} references unknown bus {item.bus!r}", id=item.id, bus=item.bus)
        if not 0 < item.power_factor <= 1:
            fail("invalid_value", f"{item.id}: power_factor must lie in (0, 1]", id=item.id)
    heads = case.feeder_heads
    if not heads:
        fail("no_feeder_head", "case has no feeder-head bus")

    full = _UnionFind(bus_ids)
    for br in case.branches:
        full.union(br.from_bus, br.to_bus)
    for sw in case.switches:
        full.union(sw.from_bus, sw.to_bus)
    if len({full.find(b) for b in bus_ids}) != 1:
        fail("disconnected_case", "case is not connected with all switches closed")

    # Switch-free part plus the feeder-head merge must be a forest, otherwise
    # no switch configuration can be radial.
    fixed = _UnionFind(bus_ids)
    for a, b in zip(heads, heads[1:]):
        fixed.union(a, b)
    for br in case.branches:
        if not fixed.union(br.from_bus, br.to_bus):
            fail(
                "meshed_fixed_network",
                f"branch {br.id} closes a loop without any switch (or ties two feeder heads)",
                id=br.id,
            )


def load_case(source: str | os.PathLike | bytes | IO) -> NetworkCase:
    """Parse and validate a JSON case from a path, raw bytes/str document or file object."""
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"malformed case document: {exc}") from exc
    return case_from_dict(doc)


def case_to_dict(case: NetworkCase) -> dict:
    return {
        "base_mva": case.base_mva,
        "buses": [
            {"id": b.id, "vmin": b.vmin, "vmax": b.vmax, "is_feeder_head": b.is_feeder_head} for b in case.buses
        ],
        "branches": [
            {"id": br.id, "from": br.from_bus, "to": br.to_bus, "r": br.r, "x": br.x, "b": br.b}
            for br in case.branches
        ],
        "switches": [{"id": s.id, "from": s.from_bus, "to": s.to_bus, "name": s.name} for s in case.switches],
        "loads": [
            {"id": ld.id, "bus": ld.bus, "profile_key": ld.profile_key, "power_factor": ld.power_factor}
            for ld in case.loads
        ],
        "generators": [
            {"id": g.id, "bus": g.bus, "profile_key": g.profile_key, "power_factor": g.power_factor}
            for g in case.generators
        ],
    }


def dump_case(case: NetworkCase) -> str:
    return json.dumps(case_to_dict(case), indent=2)


# --- profiles ---------------------------------------------------------------


def load_profiles(source: str | os.PathLike | IO) -> ProfileSet:
    """Read a profile CSV (``timestep,<key>,...``; kW, one row per timestep)."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0] or rows[0][0].strip() != "timestep":
        raise CaseParseError("profile CSV must start with a 'timestep' header column")
    keys = tuple(k.strip() for k in rows[0][1:])
    if len(set(keys)) != len(keys):
        raise CaseParseError("duplicate profile keys in CSV header")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(keys) + 1:
            raise CaseParseError(f"profile CSV line {lineno}: expected {len(keys) + 1} fields")
        try:
            data.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise CaseParseError(f"profile CSV line {lineno}: {exc}") from exc
    values = np.asarray(data, dtype=float).reshape(len(data), len(keys))
    if not np.all(np.isfinite(values)):
        raise CaseParseError("profile CSV contains non-finite values")
    return ProfileSet(keys, values)


def dump_profiles(profiles: ProfileSet) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["timestep", *profiles.keys])
    for t, row in enumerate(profiles.values):
        writer.writerow([t, *(repr(float(v)) for v in row)])
    return out.getvalue()


# --- configuration application ----------------------------------------------


def apply_configuration(case: NetworkCase, cfg: Configuration) -> OperationalNetwork:
    """Close the switches selected by ``cfg`` and partition buses into islands.

    Switches of the case that ``cfg`` does not mention (degenerate ones) stay open.
    """
    known = case.switch_by_id()
    unknown = [sid for sid in cfg.switch_ids if sid not in known]
    if unknown or len(set(cfg.switch_ids)) != len(cfg.switch_ids):
        raise CaseValidationError(
            f"configuration does not match the case switch order (unknown: {unknown})", code="length_mismatch"
        )
    closed = cfg.closed
    bus_ids = [b.id for b in case.buses]
    uf = _UnionFind(range(len(bus_ids)))
    index = case.bus_index()
    for br in case.branches:
        uf.union(index[br.from_bus], index[br.to_bus])
    for sid in closed:
        sw = known[sid]
        uf.union(index[sw.from_bus], index[sw.to_bus])

    members: dict[int, list[int]] = {}
    for i in range(len(bus_ids)):
        members.setdefault(uf.find(i), []).append(i)
    loaded = {ld.bus for ld in case.loads}
    islands = []
    for root in sorted(members, key=lambda r: members[r][0]):
        idx = members[root]
        islands.append(
            Island(
                buses=tuple(bus_ids[i] for i in idx),
                feeder_heads=tuple(bus_ids[i] for i in idx if case.buses[i].is_feeder_head),
                has_load=any(bus_ids[i] in loaded for i in idx),
            )
        )
    return OperationalNetwork(case, closed, tuple(islands))
