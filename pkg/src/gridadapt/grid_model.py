"""Power-network data model: topology, day scenarios, and datacenter placement.

The grid file format is plain text with one section per element kind
([buses], [lines], [generators], [imports], [renewables], [wind], [loads]),
one comma-separated record per line, ``#`` starting a comment. Scenario
files are CSV with header ``series,element_id,h1..h24``.

All types are immutable after construction and safe to share across
concurrent simulation workers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

HOURS = 24

SEASONS = ("spring", "summer", "fall", "winter")

# $/MWh unit costs by fuel; oil and dual-fuel default to the gas tier.
DEFAULT_FUEL_COSTS = {
    "nuclear": 1.0,
    "coal": 2.0,
    "gas": 4.0,
    "oil": 4.0,
    "dual_fuel": 4.0,
}

# $/MWh penalties: curtailing imports / wind / non-wind renewables, shedding load.
IMPORT_CURTAIL_PENALTY = 500.0
WIND_CURTAIL_PENALTY = 100.0
RENEWABLE_CURTAIL_PENALTY = 1000.0
LOAD_SHED_PENALTY = 1000.0


class GridError(Exception):
    """Invalid grid data (parse failure or invariant violation)."""


@dataclass(frozen=True)
class Bus:
    id: str
    theta_min: float = -0.6  # rad
    theta_max: float = 0.6


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    susceptance: float  # MW/rad
    flow_limit_mw: float


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    fuel: str
    cost_per_mwh: float
    p_max_mw: float
    ramp_up_mw: float
    ramp_down_mw: float


@dataclass(frozen=True)
class InjectionPoint:
    """A non-dispatchable injection (import, non-wind renewable, or wind farm)."""

    id: str
    bus: str
    curtail_penalty: float


@dataclass(frozen=True)
class LoadPoint:
    id: str
    bus: str
    shed_penalty: float


@dataclass(frozen=True)
class GridTopology:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    imports: tuple[InjectionPoint, ...]
    renewables: tuple[InjectionPoint, ...]
    wind_farms: tuple[InjectionPoint, ...]
    loads: tuple[LoadPoint, ...]

    def __post_init__(self):
        bus_ids = set()
        for b in self.buses:
            if b.id in bus_ids:
                raise GridError(f"duplicate bus id {b.id!r}")
            if b.theta_min > b.theta_max:
                raise GridError(f"bus {b.id!r}: theta_min > theta_max")
            bus_ids.add(b.id)
        for ln in self.lines:
            for end in (ln.from_bus, ln.to_bus):
                if end not in bus_ids:
                    raise GridError(f"line {ln.id!r} references undeclared bus {end!r}")
            if ln.susceptance <= 0:
                raise GridError(f"line {ln.id!r}: susceptance must be > 0")
            if ln.flow_limit_mw <= 0:
                raise GridError(f"line {ln.id!r}: flow limit must be > 0")
        for g in self.generators:
            if g.bus not in bus_ids:
                raise GridError(f"generator {g.id!r} references undeclared bus {g.bus!r}")
            if g.p_max_mw < 0 or g.ramp_up_mw < 0 or g.ramp_down_mw < 0:
                raise GridError(f"generator {g.id!r}: capacity and ramps must be >= 0")
            if g.cost_per_mwh < 0:
                raise GridError(f"generator {g.id!r}: cost must be >= 0")
        for group in (self.imports, self.renewables, self.wind_farms):
            for p in group:
                if p.bus not in bus_ids:
                    raise GridError(f"{p.id!r} references undeclared bus {p.bus!r}")
                if p.curtail_penalty < 0:
                    raise GridError(f"{p.id!r}: penalty must be >= 0")
        for d in self.loads:
            if d.bus not in bus_ids:
                raise GridError(f"load {d.id!r} references undeclared bus {d.bus!r}")
            if d.shed_penalty < 0:
                raise GridError(f"load {d.id!r}: penalty must be >= 0")

    def bus_ids(self) -> list[str]:
        return [b.id for b in self.buses]

    def is_connected(self) -> bool:
        if not self.buses:
            return True
        adj: dict[str, set[str]] = {b.id: set() for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
        seen = {self.buses[0].id}
        stack = [self.buses[0].id]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.buses)


@dataclass(frozen=True)
class DayType:
    """Season x weekday/weekend; carries the per-week day count for weighting."""

    season: str
    weekend: bool

    def __post_init__(self):
        if self.season not in SEASONS:
            raise GridError(f"unknown season {self.season!r}")

    @property
    def name(self) -> str:
        return f"{self.season.capitalize()}{'WE' if self.weekend else 'WD'}"

    @property
    def days_per_week(self) -> int:
        return 2 if self.weekend else 5


ALL_DAY_TYPES = tuple(
    DayType(season, weekend) for season in SEASONS for weekend in (False, True)
)


def parse_day_type(name: str) -> DayType:
    for dt in ALL_DAY_TYPES:
        if dt.name.lower() == name.lower():
            return dt
    raise GridError(f"unknown day type {name!r} (expected e.g. 'SpringWD')")


@dataclass(frozen=True)
class DayScenario:
    """One day type's hourly profiles plus one wind scenario (24 entries each, MW)."""

    day_type: DayType
    base_load: dict[str, tuple[float, ...]]
    import_profile: dict[str, tuple[float, ...]]
    renewable_profile: dict[str, tuple[float, ...]]
    wind_profile: dict[str, tuple[float, ...]]

    def __post_init__(self):
        for name, series in (
            ("base_load", self.base_load),
            ("import_profile", self.import_profile),
            ("renewable_profile", self.renewable_profile),
            ("wind_profile", self.wind_profile),
        ):
            for eid, values in series.items():
                if len(values) != HOURS:
                    raise GridError(f"{name}[{eid!r}]: expected {HOURS} hourly values")
                if any(v < 0 for v in values):
                    raise GridError(f"{name}[{eid!r}]: values must be >= 0")

    def total_base_load(self) -> np.ndarray:
        out = np.zeros(HOURS)
        for values in self.base_load.values():
            out += values
        return out

    def total_wind(self) -> np.ndarray:
        out = np.zeros(HOURS)
        for values in self.wind_profile.values():
            out += values
        return out

    def wind_penetration(self) -> float:
        demand = float(self.total_base_load().mean())
        if demand == 0:
            raise GridError("penetration undefined: zero demand")
        return float(self.total_wind().mean()) / demand


@dataclass(frozen=True)
class DatacenterConfig:
    """A datacenter's flexibility envelope at its grid bus."""

    id: str
    bus: str
    cap_max: float  # MW
    cap_min: float
    avg_cap: float
    step_size: float | None = None  # MW/h bound on hour-to-hour change

    def __post_init__(self):
        if not (0 <= self.cap_min <= self.avg_cap <= self.cap_max):
            raise GridError(
                f"datacenter {self.id!r}: need 0 <= cap_min <= avg_cap <= cap_max, "
                f"got [{self.cap_min}, {self.avg_cap}, {self.cap_max}]"
            )
        if self.step_size is not None and self.step_size <= 0:
            raise GridError(f"datacenter {self.id!r}: step_size must be > 0")

    @property
    def dynamic_range_mw(self) -> float:
        return self.cap_max - self.cap_min


# ---------------------------------------------------------------------------
# grid file format


_SECTIONS = ("buses", "lines", "generators", "imports", "renewables", "wind", "loads")


def load_grid(path) -> GridTopology:
    """Parse a grid file; raises GridError with line context on bad input."""
    sections: dict[str, list[tuple[int, list[str]]]] = {s: [] for s in _SECTIONS}
    current = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1].strip().lower()
                if name not in sections:
                    raise GridError(f"{path}:{lineno}: unknown section [{name}]")
                current = name
                continue
            if current is None:
                raise GridError(f"{path}:{lineno}: record before any section header")
            sections[current].append((lineno, [f.strip() for f in line.split(",")]))

    def fields(lineno, parts, n, what):
        if len(parts) != n:
            raise GridError(f"{path}:{lineno}: {what} record needs {n} fields, got {len(parts)}")
        return parts

    def num(lineno, token, what):
        try:
            return float(token)
        except ValueError:
            raise GridError(f"{path}:{lineno}: bad number {token!r} in {what} record") from None

    buses = [
        Bus(p[0], num(ln, p[1], "bus"), num(ln, p[2], "bus"))
        for ln, p in (
            (ln, fields(ln, p, 3, "bus")) for ln, p in sections["buses"]
        )
    ]
    lines = [
        Line(f"line{i + 1}", p[0], p[1], num(ln, p[2], "line"), num(ln, p[3], "line"))
        for i, (ln, p) in enumerate(
            (ln, fields(ln, p, 4, "line")) for ln, p in sections["lines"]
        )
    ]
    gens = [
        Generator(
            f"gen{i + 1}", p[0], p[1],
            num(ln, p[2], "generator"), num(ln, p[3], "generator"),
            num(ln, p[4], "generator"), num(ln, p[5], "generator"),
        )
        for i, (ln, p) in enumerate(
            (ln, fields(ln, p, 6, "generator")) for ln, p in sections["generators"]
        )
    ]

    def injections(key, prefix):
        return [
            InjectionPoint(f"{prefix}{i + 1}", p[0], num(ln, p[1], key))
            for i, (ln, p) in enumerate(
                (ln, fields(ln, p, 2, key)) for ln, p in sections[key]
            )
        ]

    loads = [
        LoadPoint(f"load{i + 1}", p[0], num(ln, p[1], "load"))
        for i, (ln, p) in enumerate(
            (ln, fields(ln, p, 2, "load")) for ln, p in sections["loads"]
        )
    ]
    return GridTopology(
        buses=tuple(buses),
        lines=tuple(lines),
        generators=tuple(gens),
        imports=tuple(injections("imports", "imp")),
        renewables=tuple(injections("renewables", "ren")),
        wind_farms=tuple(injections("wind", "wind")),
        loads=tuple(loads),
    )


def save_grid(topology: GridTopology, path) -> None:
    """Write the grid file format; load_grid(save_grid(g)) round-trips exactly."""
    out = ["[buses]"]
    out += [f"{b.id},{b.theta_min!r},{b.theta_max!r}" for b in topology.buses]
    out.append("[lines]")
    out += [
        f"{ln.from_bus},{ln.to_bus},{ln.susceptance!r},{ln.flow_limit_mw!r}"
        for ln in topology.lines
    ]
    out.append("[generators]")
    out += [
        f"{g.bus},{g.fuel},{g.cost_per_mwh!r},{g.p_max_mw!r},{g.ramp_up_mw!r},{g.ramp_down_mw!r}"
        for g in topology.generators
    ]
    for section, group in (
        ("imports", topology.imports),
        ("renewables", topology.renewables),
        ("wind", topology.wind_farms),
    ):
        out.append(f"[{section}]")
        out += [f"{p.bus},{p.curtail_penalty!r}" for p in group]
    out.append("[loads]")
    out += [f"{d.bus},{d.shed_penalty!r}" for d in topology.loads]
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# scenario CSV format


_SERIES_KEYS = ("base_load", "import", "renewable", "wind")


def save_scenario(scenario: DayScenario, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# day_type={scenario.day_type.name}\n")
        writer = csv.writer(fh)
        writer.writerow(["series", "element_id"] + [f"h{t}" for t in range(1, HOURS + 1)])
        for key, series in (
            ("base_load", scenario.base_load),
            ("import", scenario.import_profile),
            ("renewable", scenario.renewable_profile),
            ("wind", scenario.wind_profile),
        ):
            for eid, values in series.items():
                writer.writerow([key, eid] + [repr(v) for v in values])


def load_scenario(path, day_type: DayType | None = None) -> DayScenario:
    series: dict[str, dict[str, tuple[float, ...]]] = {k: {} for k in _SERIES_KEYS}
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            tag = first.strip().lstrip("#").strip()
            if tag.startswith("day_type="):
                day_type = parse_day_type(tag.split("=", 1)[1])
            header = fh.readline()
        else:
            header = first
        if not header.startswith("series,element_id"):
            raise GridError(f"{path}: missing scenario header 'series,element_id,h1..h24'")
        for row in csv.reader(fh):
            if not row:
                continue
            key, eid, values = row[0], row[1], row[2:]
            if key not in series:
                raise GridError(f"{path}: unknown series {key!r}")
            if len(values) != HOURS:
                raise GridError(f"{path}: {key}/{eid}: expected {HOURS} hours")
            series[key][eid] = tuple(float(v) for v in values)
    if day_type is None:
        raise GridError(f"{path}: day type not recorded in file and not supplied")
    return DayScenario(
        day_type=day_type,
        base_load=series["base_load"],
        import_profile=series["import"],
        renewable_profile=series["renewable"],
        wind_profile=series["wind"],
    )


# ---------------------------------------------------------------------------
# synthetic grid generation


def generate_synthetic_grid(
    n_buses: int,
    n_generators: int,
    n_wind: int,
    n_loads: int,
    seed: int,
    n_imports: int | None = None,
    n_renewables: int | None = None,
    target_capacity_mw: float | None = None,
    fuel_costs: dict | None = None,
) -> GridTopology:
    """Build a connected random grid with a nuclear/coal/gas thermal fleet.

    Total thermal capacity is scaled to ``target_capacity_mw`` (default 240 MW
    per unit, the average of a ~130-unit, 31 GW reference fleet). Deterministic
    for a fixed seed.
    """
    if n_buses < 2:
        raise GridError("need at least 2 buses")
    for name, v in (("generators", n_generators), ("wind", n_wind), ("loads", n_loads)):
        if v < 1:
            raise GridError(f"need at least one of {name}")
    rng = np.random.default_rng(seed)
    costs = dict(DEFAULT_FUEL_COSTS)
    if fuel_costs:
        costs.update(fuel_costs)
    if target_capacity_mw is None:
        target_capacity_mw = 240.0 * n_generators
    if n_imports is None:
        n_imports = max(1, round(n_buses / 45))
    if n_renewables is None:
        n_renewables = max(1, round(n_buses / 20))

    bus_ids = [f"b{i + 1}" for i in range(n_buses)]
    buses = tuple(Bus(bid) for bid in bus_ids)

    # spanning tree first, then extra lines up to ~5/3 lines per bus
    order = rng.permutation(n_buses)
    pairs = []
    for i in range(1, n_buses):
        j = int(rng.integers(0, i))
        pairs.append((int(order[j]), int(order[i])))
    existing = {frozenset(p) for p in pairs}
    n_lines_target = max(n_buses - 1, round(n_buses * 5 / 3))
    attempts = 0
    while len(pairs) < n_lines_target and attempts < 50 * n_lines_target:
        attempts += 1
        u, v = rng.integers(0, n_buses, size=2)
        if u == v or frozenset((int(u), int(v))) in existing:
            continue
        pairs.append((int(u), int(v)))
        existing.add(frozenset((int(u), int(v))))

    line_cap_scale = target_capacity_mw / max(n_buses / 4.0, 1.0)
    lines = tuple(
        Line(
            f"line{i + 1}",
            bus_ids[u],
            bus_ids[v],
            susceptance=float(rng.uniform(800.0, 2500.0)) * line_cap_scale / 1000.0,
            flow_limit_mw=float(rng.uniform(0.5, 1.2)) * line_cap_scale,
        )
        for i, (u, v) in enumerate(pairs)
    )

    # thermal fleet: ~10% nuclear / 20% coal / 70% gas units, ramps by fuel
    fuels = ["nuclear"] * max(1, round(0.1 * n_generators))
    fuels += ["coal"] * max(1, round(0.2 * n_generators))
    fuels += ["gas"] * max(1, n_generators - len(fuels))
    fuels = fuels[:n_generators]
    ramp_frac = {"nuclear": 0.1, "coal": 0.3, "gas": 0.6}
    raw_caps = rng.lognormal(mean=0.0, sigma=0.5, size=n_generators)
    caps = raw_caps * (target_capacity_mw / raw_caps.sum())
    gens = tuple(
        Generator(
            f"gen{i + 1}",
            bus_ids[int(rng.integers(0, n_buses))],
            fuel,
            costs[fuel],
            float(caps[i]),
            float(ramp_frac[fuel] * caps[i]),
            float(ramp_frac[fuel] * caps[i]),
        )
        for i, fuel in enumerate(fuels)
    )

    def pick_buses(count):
        return [bus_ids[int(rng.integers(0, n_buses))] for _ in range(count)]

    imports = tuple(
        InjectionPoint(f"imp{i + 1}", b, IMPORT_CURTAIL_PENALTY)
        for i, b in enumerate(pick_buses(n_imports))
    )
    renewables = tuple(
        InjectionPoint(f"ren{i + 1}", b, RENEWABLE_CURTAIL_PENALTY)
        for i, b in enumerate(pick_buses(n_renewables))
    )
    wind_farms = tuple(
        InjectionPoint(f"wind{i + 1}", b, WIND_CURTAIL_PENALTY)
        for i, b in enumerate(pick_buses(n_wind))
    )
    loads = tuple(
        LoadPoint(f"load{i + 1}", b, LOAD_SHED_PENALTY)
        for i, b in enumerate(pick_buses(n_loads))
    )
    return GridTopology(buses, lines, gens, imports, renewables, wind_farms, loads)


# ---------------------------------------------------------------------------
# day-type profiles and wind scenarios


_SEASON_LEVEL = {"spring": 0.88, "summer": 1.0, "fall": 0.92, "winter": 0.82}
_SEASON_PEAK_HOUR = {"spring": 19, "summer": 16, "fall": 19, "winter": 19}
_WEEKEND_FACTOR = 0.92


def _load_shape(season: str) -> np.ndarray:
    t = np.arange(1, HOURS + 1, dtype=float)
    peak = _SEASON_PEAK_HOUR[season]
    shape = 1.0 + 0.16 * np.cos(2 * np.pi * (t - peak) / 24) \
        + 0.04 * np.cos(4 * np.pi * (t - 13) / 24)
    return shape / shape.mean()


def _wind_shape() -> np.ndarray:
    # wind runs higher in the late night / early morning, opposite the load
    t = np.arange(1, HOURS + 1, dtype=float)
    shape = 1.0 + 0.45 * np.cos(2 * np.pi * (t - 3) / 24)
    return shape / shape.mean()


def _split_weights(rng, n) -> np.ndarray:
    w = rng.uniform(0.5, 1.5, size=n)
    return w / w.sum()


def build_day_scenario(
    topology: GridTopology,
    day_type: DayType,
    wind_seed: int,
    mean_load_mw: float,
    profile_seed: int = 0,
    wind_fraction: float = 0.15,
    import_fraction: float = 0.08,
    renewable_fraction: float = 0.06,
) -> DayScenario:
    """Deterministic profiles for one day type plus one random wind scenario.

    Base load, import, and renewable profiles depend only on
    (topology sizes, day type, profile_seed); the wind scenario varies with
    (season, wind_seed) and is shared by weekday and weekend, drawn as a
    log-normal perturbation around the season-shaped base curve.
    """
    season_idx = SEASONS.index(day_type.season)
    level = _SEASON_LEVEL[day_type.season] * (
        _WEEKEND_FACTOR if day_type.weekend else 1.0
    )
    prof_rng = np.random.default_rng((profile_seed, 1))
    load_w = _split_weights(prof_rng, len(topology.loads))
    import_w = _split_weights(prof_rng, len(topology.imports)) if topology.imports else []
    ren_w = _split_weights(prof_rng, len(topology.renewables)) if topology.renewables else []
    wind_w = _split_weights(prof_rng, len(topology.wind_farms))

    shape = _load_shape(day_type.season)
    base_load = {
        d.id: tuple(float(x) for x in mean_load_mw * level * w * shape)
        for d, w in zip(topology.loads, load_w)
    }
    flat = np.ones(HOURS)
    import_profile = {
        p.id: tuple(float(x) for x in mean_load_mw * level * import_fraction * w * flat)
        for p, w in zip(topology.imports, import_w)
    }
    renewable_profile = {
        p.id: tuple(float(x) for x in mean_load_mw * level * renewable_fraction * w * flat)
        for p, w in zip(topology.renewables, ren_w)
    }

    wind_rng = np.random.default_rng((wind_seed, season_idx, 7))
    daily = math.exp(wind_rng.normal(0.0, 0.25))
    noise = np.empty(HOURS)
    e = wind_rng.normal(0.0, 0.18)
    for t in range(HOURS):
        noise[t] = e
        e = 0.75 * e + wind_rng.normal(0.0, 0.18)
    hourly = np.exp(noise)
    wind_total = np.maximum(
        mean_load_mw * level * wind_fraction * _wind_shape() * daily * hourly, 0.0
    )
    wind_profile = {
        p.id: tuple(float(x) for x in wind_total * w)
        for p, w in zip(topology.wind_farms, wind_w)
    }
    return DayScenario(
        day_type=day_type,
        base_load=base_load,
        import_profile=import_profile,
        renewable_profile=renewable_profile,
        wind_profile=wind_profile,
    )


def scale_wind(
    raw_scenario: DayScenario,
    topology: GridTopology,
    day_scenarios=None,
    target_penetration: float = 0.15,
) -> DayScenario:
    """Scale all wind farms by one common factor to hit the target penetration.

    Penetration is mean hourly wind over mean hourly total base demand,
    measured on ``day_scenarios`` (defaults to the scenario being scaled, so
    the result lands exactly on target). Per-farm shapes are preserved.
    """
    if not (0 < target_penetration < 1):
        raise GridError("target penetration must be in (0, 1)")
    reference = list(day_scenarios) if day_scenarios is not None else [raw_scenario]
    mean_demand = float(np.mean([s.total_base_load().mean() for s in reference]))
    mean_wind = float(np.mean([s.total_wind().mean() for s in reference]))
    if mean_wind <= 0:
        raise GridError("cannot scale: reference wind is zero")
    k = target_penetration * mean_demand / mean_wind
    scaled = {
        eid: tuple(v * k for v in values)
        for eid, values in raw_scenario.wind_profile.items()
    }
    return replace(raw_scenario, wind_profile=scaled)


def place_datacenters(
    topology: GridTopology,
    count: int,
    cap_max: float,
    utilization: float,
    dynamic_range: tuple[float, float],
    step_size: float | None,
    seed: int,
) -> list[DatacenterConfig]:
    """Place ``count`` datacenters at random non-boundary buses.

    Buses hosting import points are excluded (imports are modeled as
    non-dispatchable boundary injections, not load sites). Sampling is
    uniform with replacement and deterministic per seed.
    """
    if count < 1:
        raise GridError("count must be >= 1")
    if not (0 < utilization <= 1):
        raise GridError("utilization must be in (0, 1]")
    lo, hi = dynamic_range
    if not (0 <= lo <= utilization <= hi <= 1):
        raise GridError("dynamic range must satisfy 0 <= lo <= utilization <= hi <= 1")
    boundary = {p.bus for p in topology.imports}
    eligible = [b.id for b in topology.buses if b.id not in boundary]
    if not eligible:
        raise GridError("no eligible (non-boundary) buses for datacenter placement")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(eligible), size=count)
    return [
        DatacenterConfig(
            id=f"dc{i + 1}",
            bus=eligible[int(k)],
            cap_max=hi * cap_max,
            cap_min=lo * cap_max,
            avg_cap=utilization * cap_max,
            step_size=step_size,
        )
        for i, k in enumerate(picks)
    ]
