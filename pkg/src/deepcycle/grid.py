"""Case data model: network, generators and offers, coal plants, storage, profiles.

Case files are JSON documents (see ``README.md`` for the schema).  Everything
is immutable after loading; profile matrices are stored as nested tuples and
exposed as numpy arrays through helper accessors.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

from .emission import DynamicEmissionParams, StaticEmissionParams

GENERATOR_KINDS = ("coal", "gas", "nuclear", "wind")


class CaseParseError(ValueError):
    """The case file is not well-formed JSON."""


class CaseValidationError(ValueError):
    """The case violates the schema or a data invariant.

    ``violations`` holds ``(path, message)`` pairs, path in dotted form such
    as ``storages[0](S1).bus``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(f"{p}: {m}" for p, m in self.violations)
        super().__init__(text)


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Bus:
    id: int
    reference: bool = False


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    susceptance: float  # per unit on base_mva
    capacity: float  # MW, symmetric
    name: str = ""


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    base_mva: float = 100.0

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)

    def bus_position(self, bus_id: int) -> int:
        return self.bus_ids.index(bus_id)

    @property
    def reference_position(self) -> int:
        return next(i for i, b in enumerate(self.buses) if b.reference)


@dataclass(frozen=True)
class OfferBlock:
    quantity: float  # MW
    price: float  # $/MWh


@dataclass(frozen=True)
class GeneratorSpec:
    id: str
    bus: int
    kind: str
    g_min: float
    g_max: float
    ramp_limit: float
    offer_blocks: tuple[OfferBlock, ...]
    no_load_cost: float = 0.0
    startup_cost: float = 0.0
    shutdown_cost: float = 0.0
    min_uptime: int = 1
    min_downtime: int = 1
    initial_commitment: bool = True
    initial_output: float = 0.0
    hours_in_initial_state: int = 1  # >= min up/down time means no carry-over

    @property
    def is_wind(self) -> bool:
        return self.kind == "wind"

    def cost(self, g: float) -> float:
        return offer_cost(self.offer_blocks, g)


@dataclass(frozen=True)
class CoalPlantSpec:
    base: GeneratorSpec
    eol: float  # economic operation level, MW
    static_params: StaticEmissionParams = field(default_factory=StaticEmissionParams)
    dynamic_params: DynamicEmissionParams = field(default_factory=DynamicEmissionParams)
    ramp_up_cost: float = 0.0  # $/MW on alpha
    ramp_down_cost: float = 0.0  # $/MW on beta

    @property
    def id(self) -> str:
        return self.base.id

    @property
    def kappa(self) -> float:
        return self.eol / self.base.g_max


@dataclass(frozen=True)
class StorageSpec:
    id: str
    bus: int
    power_rating: float  # MW
    energy_rating: float  # MWh
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    initial_energy: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    probability: float
    load_scale: float = 1.0
    wind_scale: float = 1.0
    load: tuple[tuple[float, ...], ...] | None = None
    wind: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class CaseData:
    name: str
    network: Network
    generators: tuple[GeneratorSpec, ...]
    coal_plants: tuple[CoalPlantSpec, ...]
    storages: tuple[StorageSpec, ...]
    load: tuple[tuple[float, ...], ...]  # T x N, MW
    wind: tuple[tuple[float, ...], ...]  # T x (#wind units), MW
    horizon: int
    slice_hours: tuple[float, ...]
    scenarios: tuple[Scenario, ...]
    allow_curtailment: bool = False

    @property
    def wind_units(self) -> tuple[GeneratorSpec, ...]:
        return tuple(g for g in self.generators if g.is_wind)

    @property
    def committable(self) -> tuple[GeneratorSpec, ...]:
        return tuple(g for g in self.generators if not g.is_wind)

    def generator(self, gen_id: str) -> GeneratorSpec:
        for g in self.generators:
            if g.id == gen_id:
                return g
        raise KeyError(gen_id)

    def coal_plant(self, gen_id: str) -> CoalPlantSpec | None:
        for c in self.coal_plants:
            if c.id == gen_id:
                return c
        return None

    def load_matrix(self, k: int = 0) -> np.ndarray:
        sc = self.scenarios[k]
        base = np.array(sc.load if sc.load is not None else self.load, dtype=float)
        return base * sc.load_scale

    def wind_matrix(self, k: int = 0) -> np.ndarray:
        sc = self.scenarios[k]
        src = sc.wind if sc.wind is not None else self.wind
        arr = np.array(src, dtype=float).reshape(self.horizon, len(self.wind_units))
        return arr * sc.wind_scale


# ---------------------------------------------------------------------------
# offer curves


def offer_cost(blocks, g: float) -> float:
    """Block-offer cost of producing ``g`` MW (last price extends beyond the blocks)."""
    total, left = 0.0, g
    for b in blocks:
        take = min(left, b.quantity)
        total += take * b.price
        left -= take
        if left <= 0:
            break
    if left > 0 and blocks:
        total += left * blocks[-1].price
    return total


def offer_segments(blocks) -> list[tuple[float, float]]:
    """(slope, intercept) pairs whose pointwise max is the offer cost curve."""
    segs = []
    q0 = 0.0
    c0 = 0.0
    for b in blocks:
        segs.append((b.price, c0 - b.price * q0))
        c0 += b.quantity * b.price
        q0 += b.quantity
    return segs


def split_coal_plant(spec: CoalPlantSpec) -> tuple[GeneratorSpec, GeneratorSpec]:
    """Two-unit decomposition at the economic operation level.

    Unit I spans [g_min, eol] and carries the offer blocks up to cumulative
    quantity ``eol``; Unit II spans [0, g_max - eol] with the rest.  A block
    straddling ``eol`` is cut in two at the boundary.  Start-up, shut-down and
    no-load costs stay with the parent plant.
    """
    base = spec.base
    eol = spec.eol
    if not (base.g_min < eol < base.g_max):
        raise ValueError(
            f"coal plant {base.id}: eol={eol} must lie strictly inside (g_min={base.g_min}, g_max={base.g_max})"
        )
    first, second = [], []
    cum = 0.0
    for b in base.offer_blocks:
        lo, hi = cum, cum + b.quantity
        if hi <= eol:
            first.append(b)
        elif lo >= eol:
            second.append(b)
        else:
            first.append(OfferBlock(eol - lo, b.price))
            second.append(OfferBlock(hi - eol, b.price))
        cum = hi
    common = dict(
        kind="coal",
        bus=base.bus,
        ramp_limit=base.ramp_limit,
        no_load_cost=0.0,
        startup_cost=0.0,
        shutdown_cost=0.0,
        min_uptime=1,
        min_downtime=1,
        initial_commitment=base.initial_commitment,
        hours_in_initial_state=base.hours_in_initial_state,
    )
    unit_1 = GeneratorSpec(
        id=f"{base.id}.I",
        g_min=base.g_min,
        g_max=eol,
        offer_blocks=tuple(first),
        initial_output=min(base.initial_output, eol),
        **common,
    )
    unit_2 = GeneratorSpec(
        id=f"{base.id}.II",
        g_min=0.0,
        g_max=base.g_max - eol,
        offer_blocks=tuple(second),
        initial_output=max(base.initial_output - eol, 0.0),
        **{**common, "initial_commitment": base.initial_commitment and base.initial_output > eol},
    )
    return unit_1, unit_2


# ---------------------------------------------------------------------------
# network matrices


def _check_connected(net: Network) -> None:
    n = net.n_buses
    pos = {b.id: i for i, b in enumerate(net.buses)}
    rows = [pos[l.from_bus] for l in net.lines]
    cols = [pos[l.to_bus] for l in net.lines]
    adj = np.zeros((n, n))
    adj[rows, cols] = 1
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise NetworkError(f"network is not connected ({ncomp} islands)")


def build_bus_susceptance(net: Network) -> np.ndarray:
    """N x N DC susceptance matrix (per unit), Laplacian-weighted by line susceptance."""
    _check_connected(net)
    n = net.n_buses
    pos = {b.id: i for i, b in enumerate(net.buses)}
    B = np.zeros((n, n))
    for line in net.lines:
        i, j, b = pos[line.from_bus], pos[line.to_bus], line.susceptance
        B[i, i] += b
        B[j, j] += b
        B[i, j] -= b
        B[j, i] -= b
    return B


def build_branch_susceptance(net: Network) -> np.ndarray:
    """L x N matrix mapping bus angles to per-unit line flows (from -> to)."""
    _check_connected(net)
    pos = {b.id: i for i, b in enumerate(net.buses)}
    Bbr = np.zeros((len(net.lines), net.n_buses))
    for ell, line in enumerate(net.lines):
        Bbr[ell, pos[line.from_bus]] = line.susceptance
        Bbr[ell, pos[line.to_bus]] = -line.susceptance
    return Bbr


def incidence_matrix(net: Network) -> np.ndarray:
    """Signed L x N incidence (+1 at from bus, -1 at to bus)."""
    pos = {b.id: i for i, b in enumerate(net.buses)}
    C = np.zeros((len(net.lines), net.n_buses))
    for ell, line in enumerate(net.lines):
        C[ell, pos[line.from_bus]] = 1.0
        C[ell, pos[line.to_bus]] = -1.0
    return C


def line_flows_mw(net: Network, theta: np.ndarray) -> np.ndarray:
    return net.base_mva * (build_branch_susceptance(net) @ np.asarray(theta, dtype=float))


# ---------------------------------------------------------------------------
# validation


def validate_case(case: CaseData) -> list[tuple[str, str]]:
    """Return every invariant violation as ``(path, message)``; empty means valid."""
    out: list[tuple[str, str]] = []
    net = case.network
    ids = [b.id for b in net.buses]
    if len(set(ids)) != len(ids):
        out.append(("network.buses", "duplicate bus ids"))
    refs = [b.id for b in net.buses if b.reference]
    if len(refs) != 1:
        out.append(("network.buses", f"exactly one reference bus required, found {len(refs)}"))
    idset = set(ids)
    for i, line in enumerate(net.lines):
        p = f"network.lines[{i}]"
        if line.from_bus not in idset or line.to_bus not in idset:
            out.append((p, f"unknown bus in line {line.from_bus}-{line.to_bus}"))
        if line.from_bus == line.to_bus:
            out.append((p, "from_bus equals to_bus"))
        if not line.susceptance > 0:
            out.append((p + ".susceptance", "must be > 0"))
        if not line.capacity > 0:
            out.append((p + ".capacity", "must be > 0"))
    if not any(p.startswith("network.lines") for p, _ in out) and net.buses:
        try:
            _check_connected(net)
        except NetworkError as exc:
            out.append(("network", str(exc)))

    if not case.generators:
        out.append(("generators", "no generators"))
    seen = set()
    for i, g in enumerate(case.generators):
        p = f"generators[{i}]({g.id})"
        if g.id in seen:
            out.append((p + ".id", "duplicate generator id"))
        seen.add(g.id)
        if g.bus not in idset:
            out.append((p + ".bus", f"bus {g.bus} does not exist"))
        if g.kind not in GENERATOR_KINDS:
            out.append((p + ".kind", f"unknown kind {g.kind!r}"))
        if not (0 <= g.g_min <= g.g_max):
            out.append((p, f"need 0 <= g_min <= g_max (got {g.g_min}, {g.g_max})"))
        if not g.ramp_limit > 0:
            out.append((p + ".ramp_limit", "must be > 0"))
        if g.min_uptime < 1 or g.min_downtime < 1:
            out.append((p, "min_uptime and min_downtime must be >= 1"))
        q = sum(b.quantity for b in g.offer_blocks)
        if q < g.g_max - 1e-9:
            out.append((p + ".offer_blocks", f"block quantities sum to {q} < g_max {g.g_max}"))
        for j, b in enumerate(g.offer_blocks):
            if not b.quantity > 0:
                out.append((p + f".offer_blocks[{j}]", "quantity must be > 0"))
        prices = [b.price for b in g.offer_blocks]
        if any(b < a for a, b in zip(prices, prices[1:])):
            out.append((p + ".offer_blocks", "prices must be non-decreasing (convex cost)"))
        if g.initial_commitment and not (g.g_min - 1e-9 <= g.initial_output <= g.g_max + 1e-9) and not g.is_wind:
            out.append((p + ".initial_output", "outside [g_min, g_max] while committed"))
        if not g.initial_commitment and g.initial_output != 0 and not g.is_wind:
            out.append((p + ".initial_output", "must be 0 while decommitted"))

    for i, c in enumerate(case.coal_plants):
        p = f"coal_plants[{i}]({c.id})"
        if c.base.id not in seen:
            out.append((p + ".generator", f"generator {c.base.id} does not exist"))
        if c.base.kind != "coal":
            out.append((p + ".generator", f"generator {c.base.id} is not of kind coal"))
        if not (c.base.g_min < c.eol < c.base.g_max):
            out.append((p + ".eol", f"eol {c.eol} outside (g_min, g_max)"))
        if c.ramp_up_cost < 0 or c.ramp_down_cost < 0:
            out.append((p, "ramp costs must be >= 0"))
        d = c.dynamic_params
        if not (0 < d.tau < 1) or d.b < 0 or d.N2 <= 0:
            out.append((p + ".emission.dynamic", "need b >= 0, 0 < tau < 1, N2 > 0"))
        s = c.static_params
        if s.f1 <= 0 or s.N1 <= 0:
            out.append((p + ".emission.static", "need f1 > 0 and N1 > 0"))
    coal_ids = [c.id for c in case.coal_plants]
    if len(set(coal_ids)) != len(coal_ids):
        out.append(("coal_plants", "duplicate coal plant"))

    sids = set()
    for i, s in enumerate(case.storages):
        p = f"storages[{i}]({s.id})"
        if s.id in sids:
            out.append((p + ".id", "duplicate storage id"))
        sids.add(s.id)
        if s.bus not in idset:
            out.append((p + ".bus", f"storage {s.id} at nonexistent bus {s.bus}"))
        if s.power_rating < 0 or s.energy_rating < 0:
            out.append((p, "ratings must be >= 0"))
        if not (0 < s.charge_efficiency <= 1 and 0 < s.discharge_efficiency <= 1):
            out.append((p, "efficiencies must lie in (0, 1]"))
        if not (0 <= s.initial_energy <= s.energy_rating):
            out.append((p + ".initial_energy", "must lie in [0, energy_rating]"))

    T = case.horizon
    if T < 1:
        out.append(("horizon", "horizon must be >= 1"))
    if len(case.slice_hours) != T or any(h <= 0 for h in case.slice_hours):
        out.append(("slice_hours", f"need {T} positive slice durations"))
    if len(case.load) != T or any(len(r) != net.n_buses for r in case.load):
        out.append(("profiles.load", f"load must be {T} x {net.n_buses}"))
    nw = len(case.wind_units)
    if len(case.wind) != T or any(len(r) != nw for r in case.wind):
        out.append(("profiles.wind", f"wind must be {T} x {nw}"))
    if not case.scenarios:
        out.append(("scenarios", "at least one scenario required"))
    else:
        total = sum(s.probability for s in case.scenarios)
        if abs(total - 1.0) > 1e-9:
            out.append(("scenarios", f"probabilities sum to {total:g}, expected 1"))
        for i, s in enumerate(case.scenarios):
            if s.probability < 0:
                out.append((f"scenarios[{i}]", "negative probability"))
            if s.load is not None and (len(s.load) != T or any(len(r) != net.n_buses for r in s.load)):
                out.append((f"scenarios[{i}].load", "shape mismatch"))
            if s.wind is not None and (len(s.wind) != T or any(len(r) != nw for r in s.wind)):
                out.append((f"scenarios[{i}].wind", "shape mismatch"))

    if not out:
        cap = sum(g.g_max for g in case.committable)
        for k, sc in enumerate(case.scenarios):
            load = case.load_matrix(k).sum(axis=1)
            wind = case.wind_matrix(k).sum(axis=1) if nw else np.zeros(T)
            short = np.flatnonzero(load > cap + wind + 1e-9)
            if short.size:
                t = int(short[0])
                out.append(
                    (f"profiles.load[{t}]", f"scenario {sc.name}: load {load[t]:.3f} MW exceeds capacity {cap + wind[t]:.3f} MW")
                )
    return out


# ---------------------------------------------------------------------------
# JSON I/O

_TOP_KEYS = {"name", "base_mva", "network", "generators", "coal_plants", "storages", "profiles",
             "horizon", "slice_hours", "scenarios", "allow_curtailment", "description"}
_GEN_KEYS = {"id", "bus", "kind", "g_min", "g_max", "ramp_limit", "no_load_cost", "startup_cost",
             "shutdown_cost", "min_uptime", "min_downtime", "offer_blocks", "initial_commitment",
             "initial_output", "hours_in_initial_state"}
_COAL_KEYS = {"generator", "eol", "ramp_up_cost", "ramp_down_cost", "emission"}
_STOR_KEYS = {"id", "bus", "power_rating", "energy_rating", "charge_efficiency",
              "discharge_efficiency", "initial_energy"}
_SCEN_KEYS = {"name", "probability", "load_scale", "wind_scale", "load", "wind"}


class _Reader:
    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def keys(self, obj, allowed, path, required=()):
        if not isinstance(obj, dict):
            self.errors.append((path, "expected an object"))
            return False
        for k in obj:
            if k not in allowed:
                self.errors.append((f"{path}.{k}" if path else k, "unknown field"))
        for k in required:
            if k not in obj:
                self.errors.append((f"{path}.{k}" if path else k, "missing required field"))
        return True

    def num(self, obj, key, path, default=None):
        if key not in obj:
            if default is None:
                self.errors.append((f"{path}.{key}", "missing required field"))
                return math.nan
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.errors.append((f"{path}.{key}", f"expected a number, got {v!r}"))
            return math.nan
        return float(v)

    def integer(self, obj, key, path, default=None):
        v = self.num(obj, key, path, default)
        if not math.isnan(v) and v != int(v):
            self.errors.append((f"{path}.{key}", "expected an integer"))
        return int(v) if not math.isnan(v) else 0

    def matrix(self, value, path):
        if value is None:
            return None
        try:
            return tuple(tuple(float(x) for x in row) for row in value)
        except (TypeError, ValueError):
            self.errors.append((path, "expected a matrix of numbers"))
            return ()


def case_from_dict(doc: dict) -> CaseData:
    """Build and validate a case from its JSON document."""
    r = _Reader()
    if not r.keys(doc, _TOP_KEYS, "", required=("network", "generators", "profiles", "horizon")):
        raise CaseValidationError(r.errors)

    netdoc = doc.get("network", {})
    buses, lines = [], []
    if r.keys(netdoc, {"buses", "lines"}, "network", required=("buses", "lines")):
        for i, b in enumerate(netdoc.get("buses", [])):
            p = f"network.buses[{i}]"
            if r.keys(b, {"id", "reference"}, p, required=("id",)):
                buses.append(Bus(r.integer(b, "id", p), bool(b.get("reference", False))))
        for i, ln in enumerate(netdoc.get("lines", [])):
            p = f"network.lines[{i}]"
            if r.keys(ln, {"from", "to", "susceptance", "capacity", "name"}, p,
                      required=("from", "to", "susceptance", "capacity")):
                lines.append(Line(r.integer(ln, "from", p), r.integer(ln, "to", p),
                                  r.num(ln, "susceptance", p), r.num(ln, "capacity", p),
                                  str(ln.get("name", f"L{i + 1}"))))
    buses.sort(key=lambda b: b.id)
    network = Network(tuple(buses), tuple(lines), r.num(doc, "base_mva", "", 100.0))

    gens = []
    for i, g in enumerate(doc.get("generators", [])):
        p = f"generators[{i}]"
        if not r.keys(g, _GEN_KEYS, p, required=("id", "bus", "kind", "g_max", "offer_blocks")):
            continue
        blocks = []
        for j, blk in enumerate(g.get("offer_blocks", [])):
            if isinstance(blk, (list, tuple)) and len(blk) == 2:
                blocks.append(OfferBlock(float(blk[0]), float(blk[1])))
            elif isinstance(blk, dict) and r.keys(blk, {"quantity", "price"}, f"{p}.offer_blocks[{j}]",
                                                     required=("quantity", "price")):
                blocks.append(OfferBlock(float(blk["quantity"]), float(blk["price"])))
            else:
                r.errors.append((f"{p}.offer_blocks[{j}]", "expected [quantity, price]"))
        gmax = r.num(g, "g_max", p)
        min_up = r.integer(g, "min_uptime", p, 1)
        min_down = r.integer(g, "min_downtime", p, 1)
        gens.append(GeneratorSpec(
            id=str(g["id"]),
            bus=r.integer(g, "bus", p),
            kind=str(g["kind"]),
            g_min=r.num(g, "g_min", p, 0.0),
            g_max=gmax,
            ramp_limit=r.num(g, "ramp_limit", p, gmax if not math.isnan(gmax) else 1.0),
            offer_blocks=tuple(blocks),
            no_load_cost=r.num(g, "no_load_cost", p, 0.0),
            startup_cost=r.num(g, "startup_cost", p, 0.0),
            shutdown_cost=r.num(g, "shutdown_cost", p, 0.0),
            min_uptime=min_up,
            min_downtime=min_down,
            initial_commitment=bool(g.get("initial_commitment", True)),
            initial_output=r.num(g, "initial_output", p, 0.0),
            # missing history means the initial state is already settled
            hours_in_initial_state=r.integer(g, "hours_in_initial_state", p, max(min_up, min_down)),
        ))
    by_id = {g.id: g for g in gens}

    coal = []
    for i, c in enumerate(doc.get("coal_plants", [])):
        p = f"coal_plants[{i}]"
        if not r.keys(c, _COAL_KEYS, p, required=("generator", "eol")):
            continue
        gid = str(c["generator"])
        if gid not in by_id:
            r.errors.append((f"{p}.generator", f"generator {gid} does not exist"))
            continue
        em = c.get("emission", {})
        sp_ = StaticEmissionParams()
        dp = DynamicEmissionParams()
        if r.keys(em, {"static", "dynamic"}, f"{p}.emission"):
            if "static" in em and r.keys(em["static"], {"f0", "f1", "N1"}, f"{p}.emission.static"):
                sp_ = StaticEmissionParams(**{k: float(v) for k, v in em["static"].items()})
            if "dynamic" in em and r.keys(em["dynamic"], {"b", "tau", "N2"}, f"{p}.emission.dynamic"):
                dp = DynamicEmissionParams(**{k: float(v) for k, v in em["dynamic"].items()})
        coal.append(CoalPlantSpec(
            base=by_id[gid],
            eol=r.num(c, "eol", p),
            static_params=sp_,
            dynamic_params=dp,
            ramp_up_cost=r.num(c, "ramp_up_cost", p, 0.0),
            ramp_down_cost=r.num(c, "ramp_down_cost", p, 0.0),
        ))

    stor = []
    for i, s in enumerate(doc.get("storages", [])):
        p = f"storages[{i}]"
        if not r.keys(s, _STOR_KEYS, p, required=("id", "bus", "power_rating", "energy_rating")):
            continue
        stor.append(StorageSpec(
            id=str(s["id"]),
            bus=r.integer(s, "bus", p),
            power_rating=r.num(s, "power_rating", p),
            energy_rating=r.num(s, "energy_rating", p),
            charge_efficiency=r.num(s, "charge_efficiency", p, 1.0),
            discharge_efficiency=r.num(s, "discharge_efficiency", p, 1.0),
            initial_energy=r.num(s, "initial_energy", p, 0.0),
        ))

    T = r.integer(doc, "horizon", "")
    prof = doc.get("profiles", {})
    load, wind = (), ()
    if r.keys(prof, {"load", "wind"}, "profiles", required=("load",)):
        load = r.matrix(prof.get("load"), "profiles.load") or ()
        wind_raw = prof.get("wind")
        nw = sum(1 for g in gens if g.kind == "wind")
        wind = r.matrix(wind_raw, "profiles.wind") if wind_raw is not None else tuple(() for _ in range(T))
        if nw == 0 and wind_raw is None:
            wind = tuple(() for _ in range(T))

    sh = doc.get("slice_hours", 1.0)
    if isinstance(sh, (int, float)) and not isinstance(sh, bool):
        slice_hours = tuple(float(sh) for _ in range(max(T, 0)))
    else:
        slice_hours = tuple(float(v) for v in sh)

    scen = []
    for i, s in enumerate(doc.get("scenarios", [{"name": "base", "probability": 1.0}])):
        p = f"scenarios[{i}]"
        if not r.keys(s, _SCEN_KEYS, p, required=("probability",)):
            continue
        scen.append(Scenario(
            name=str(s.get("name", f"s{i}")),
            probability=r.num(s, "probability", p),
            load_scale=r.num(s, "load_scale", p, 1.0),
            wind_scale=r.num(s, "wind_scale", p, 1.0),
            load=r.matrix(s.get("load"), f"{p}.load"),
            wind=r.matrix(s.get("wind"), f"{p}.wind"),
        ))

    if r.errors:
        raise CaseValidationError(r.errors)
    case = CaseData(
        name=str(doc.get("name", "case")),
        network=network,
        generators=tuple(gens),
        coal_plants=tuple(coal),
        storages=tuple(stor),
        load=load,
        wind=wind,
        horizon=T,
        slice_hours=slice_hours,
        scenarios=tuple(scen),
        allow_curtailment=bool(doc.get("allow_curtailment", False)),
    )
    problems = validate_case(case)
    if problems:
        raise CaseValidationError(problems)
    return case


BUNDLED_CASE = "ieee30_mod.case"


def bundled_case_path() -> Path:
    """Path of the modified IEEE 30-bus case shipped with the package."""
    return Path(str(resources.files("deepcycle") / "data" / BUNDLED_CASE))


def load_case(path) -> CaseData:
    """Parse and validate a JSON case file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"{path}: {exc}") from exc
    return case_from_dict(doc)


def case_to_dict(case: CaseData) -> dict:
    def gen(g: GeneratorSpec) -> dict:
        return {
            "id": g.id, "bus": g.bus, "kind": g.kind, "g_min": g.g_min, "g_max": g.g_max,
            "ramp_limit": g.ramp_limit, "no_load_cost": g.no_load_cost, "startup_cost": g.startup_cost,
            "shutdown_cost": g.shutdown_cost, "min_uptime": g.min_uptime, "min_downtime": g.min_downtime,
            "offer_blocks": [[b.quantity, b.price] for b in g.offer_blocks],
            "initial_commitment": g.initial_commitment, "initial_output": g.initial_output,
            "hours_in_initial_state": g.hours_in_initial_state,
        }

    def scen(s: Scenario) -> dict:
        d = {"name": s.name, "probability": s.probability, "load_scale": s.load_scale, "wind_scale": s.wind_scale}
        if s.load is not None:
            d["load"] = [list(r) for r in s.load]
        if s.wind is not None:
            d["wind"] = [list(r) for r in s.wind]
        return d

    return {
        "name": case.name,
        "base_mva": case.network.base_mva,
        "horizon": case.horizon,
        "slice_hours": list(case.slice_hours),
        "allow_curtailment": case.allow_curtailment,
        "network": {
            "buses": [{"id": b.id, "reference": b.reference} for b in case.network.buses],
            "lines": [{"from": l.from_bus, "to": l.to_bus, "susceptance": l.susceptance,
                       "capacity": l.capacity, "name": l.name} for l in case.network.lines],
        },
        "generators": [gen(g) for g in case.generators],
        "coal_plants": [{
            "generator": c.id, "eol": c.eol, "ramp_up_cost": c.ramp_up_cost, "ramp_down_cost": c.ramp_down_cost,
            "emission": {
                "static": {"f0": c.static_params.f0, "f1": c.static_params.f1, "N1": c.static_params.N1},
                "dynamic": {"b": c.dynamic_params.b, "tau": c.dynamic_params.tau, "N2": c.dynamic_params.N2},
            },
        } for c in case.coal_plants],
        "storages": [{
            "id": s.id, "bus": s.bus, "power_rating": s.power_rating, "energy_rating": s.energy_rating,
            "charge_efficiency": s.charge_efficiency, "discharge_efficiency": s.discharge_efficiency,
            "initial_energy": s.initial_energy,
        } for s in case.storages],
        "profiles": {"load": [list(r) for r in case.load], "wind": [list(r) for r in case.wind]},
        "scenarios": [scen(s) for s in case.scenarios],
    }


def serialize_case(case: CaseData) -> str:
    return json.dumps(case_to_dict(case), indent=1)


def save_case(case: CaseData, path) -> None:
    Path(path).write_text(serialize_case(case))


def read_profile_csv(path, columns=None) -> tuple[tuple[float, ...], ...]:
    """Read an hourly profile CSV: one row per hour, one column per bus (or wind unit).

    A header row is required.  A leading ``hour`` column is ignored.  When
    ``columns`` is given (bus ids or unit ids, as strings or ints) the CSV
    columns are reordered to match and missing ones are filled with zeros.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CaseParseError(f"{path}: empty profile file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    drop = 1 if header and header[0].lower() in ("hour", "t", "slice") else 0
    header = header[drop:]
    try:
        data = [[float(v) for v in r[drop:]] for r in body]
    except ValueError as exc:
        raise CaseParseError(f"{path}: {exc}") from exc
    if columns is None:
        return tuple(tuple(r) for r in data)
    want = [str(c) for c in columns]
    idx = {h: i for i, h in enumerate(header)}
    unknown = [h for h in header if h not in want]
    if unknown:
        raise CaseValidationError([(str(path), f"unknown profile columns {unknown}")])
    return tuple(tuple(r[idx[c]] if c in idx else 0.0 for c in want) for r in data)


def with_profiles(case: CaseData, load=None, wind=None) -> CaseData:
    new = replace(case, load=load if load is not None else case.load, wind=wind if wind is not None else case.wind)
    problems = validate_case(new)
    if problems:
        raise CaseValidationError(problems)
    return new


def with_wind(case: CaseData, enabled: bool) -> CaseData:
    """Copy of the case with the wind profile kept (enabled) or zeroed."""
    if enabled:
        return case
    zero = tuple(tuple(0.0 for _ in row) for row in case.wind)
    scen = tuple(replace(s, wind=None if s.wind is None else zero) for s in case.scenarios)
    return replace(case, wind=zero, scenarios=scen)
