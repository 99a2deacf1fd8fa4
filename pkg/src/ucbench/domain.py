"""Core data model: generating units, instances, schedules, validation.

Everything in this module is a plain immutable-after-construction value
object. All other modules consume these types; none of them mutate them.
Money is in abstract cost units, power in MW, and one period is one model
step — there are no calendar semantics anywhere.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class Unit:
    """A thermal generating unit and its full parameter set.

    ``pre_offline`` encodes the only piece of pre-horizon history: the
    number of periods the unit has already been offline when the horizon
    starts. ``pre_offline == 0`` means the unit enters the horizon online
    (and its prior uptime is assumed long enough that no residual
    minimum-uptime obligation applies at period 1).
    """

    id: str
    p_min: float                 # minimum stable production when online (MW)
    p_max: float                 # capacity (MW)
    ramp_up: float               # max production increase per period (MW)
    ramp_down: float             # max production decrease per period (MW)
    startup_ramp: float          # production cap in the period a unit starts (MW)
    shutdown_ramp: float         # production cap in the period before a stop (MW)
    min_up: int                  # minimum consecutive online periods
    min_down: int                # minimum consecutive offline periods
    cost_fixed_on: float         # cost per online period (A)
    cost_variable: float         # cost per MW and period (B)
    startup_var_cost: float      # off-time-dependent start-up cost scale (V)
    startup_fixed_cost: float    # off-time-independent start-up cost (F)
    heat_loss: float             # cooling rate per offline period, in (0,1)
    pre_offline: int = 0         # offline periods before the horizon (PD)
    node: str | None = None     # network node, if any

    def violations(self) -> list[str]:
        """Return human-readable invariant breaches (empty when valid)."""
        out = []
        if not (0 <= self.p_min <= self.p_max):
            out.append(f"unit {self.id}: requires 0 <= p_min <= p_max, "
                       f"got p_min={self.p_min}, p_max={self.p_max}")
        if not (0.0 < self.heat_loss < 1.0):
            out.append(f"unit {self.id}: heat_loss must lie in (0, 1), "
                       f"got {self.heat_loss}")
        if self.startup_ramp < self.p_min:
            out.append(f"unit {self.id}: startup_ramp {self.startup_ramp} "
                       f"< p_min {self.p_min} (no feasible start)")
        if self.shutdown_ramp < self.p_min:
            out.append(f"unit {self.id}: shutdown_ramp {self.shutdown_ramp} "
                       f"< p_min {self.p_min} (no feasible stop)")
        if self.min_up < 1:
            out.append(f"unit {self.id}: min_up must be >= 1, got {self.min_up}")
        if self.min_down < 1:
            out.append(f"unit {self.id}: min_down must be >= 1, got {self.min_down}")
        if self.pre_offline < 0:
            out.append(f"unit {self.id}: pre_offline must be >= 0, "
                       f"got {self.pre_offline}")
        if self.startup_var_cost < 0:
            out.append(f"unit {self.id}: startup_var_cost must be >= 0, "
                       f"got {self.startup_var_cost}")
        if self.startup_fixed_cost < 0:
            out.append(f"unit {self.id}: startup_fixed_cost must be >= 0, "
                       f"got {self.startup_fixed_cost}")
        return out

    def to_dict(self) -> dict:
        d = {
            "id": self.id, "p_min": self.p_min, "p_max": self.p_max,
            "ramp_up": self.ramp_up, "ramp_down": self.ramp_down,
            "startup_ramp": self.startup_ramp,
            "shutdown_ramp": self.shutdown_ramp,
            "min_up": self.min_up, "min_down": self.min_down,
            "cost_fixed_on": self.cost_fixed_on,
            "cost_variable": self.cost_variable,
            "startup_var_cost": self.startup_var_cost,
            "startup_fixed_cost": self.startup_fixed_cost,
            "heat_loss": self.heat_loss, "pre_offline": self.pre_offline,
        }
        if self.node is not None:
            d["node"] = self.node
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Unit":
        return cls(
            id=_expect(d, "id", str, "unit"),
            p_min=_num(d, "p_min"), p_max=_num(d, "p_max"),
            ramp_up=_num(d, "ramp_up"), ramp_down=_num(d, "ramp_down"),
            startup_ramp=_num(d, "startup_ramp"),
            shutdown_ramp=_num(d, "shutdown_ramp"),
            min_up=_int(d, "min_up"), min_down=_int(d, "min_down"),
            cost_fixed_on=_num(d, "cost_fixed_on"),
            cost_variable=_num(d, "cost_variable"),
            startup_var_cost=_num(d, "startup_var_cost"),
            startup_fixed_cost=_num(d, "startup_fixed_cost"),
            heat_loss=_num(d, "heat_loss"),
            pre_offline=_int(d, "pre_offline", default=0),
            node=d.get("node"),
        )


@dataclass
class Line:
    """A transmission line: capacity plus per-node flow sensitivities."""

    id: str
    capacity: float
    alpha: dict[str, float]   # node id -> flow sensitivity of net injection


@dataclass
class Network:
    """Node demand split and line flow limits.

    ``nodes`` maps node id -> demand factor gamma; the factors must sum
    to 1. A line's flow in period t is
    sum_n alpha[n] * (production at n - gamma[n] * load(t)).
    """

    nodes: dict[str, float]
    lines: list[Line]

    def violations(self) -> list[str]:
        out = []
        total = sum(self.nodes.values())
        if abs(total - 1.0) > 1e-9:
            out.append(f"network: demand factors sum to {total!r}, expected 1")
        for line in self.lines:
            if line.capacity <= 0:
                out.append(f"line {line.id}: capacity must be > 0, "
                           f"got {line.capacity}")
            for n in line.alpha:
                if n not in self.nodes:
                    out.append(f"line {line.id}: shift factor references "
                               f"undeclared node {n!r}")
        return out

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n, "gamma": g} for n, g in self.nodes.items()],
            "lines": [{"id": l.id, "capacity": l.capacity, "alpha": dict(l.alpha)}
                      for l in self.lines],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        nodes_raw = _expect(d, "nodes", list, "network")
        nodes: dict[str, float] = {}
        for i, nd in enumerate(nodes_raw):
            if not isinstance(nd, dict):
                raise InstanceFormatError(f"network.nodes[{i}]: expected object")
            nodes[_expect(nd, "id", str, f"network.nodes[{i}]")] = _num(nd, "gamma")
        lines = []
        for i, ld in enumerate(_expect(d, "lines", list, "network")):
            if not isinstance(ld, dict):
                raise InstanceFormatError(f"network.lines[{i}]: expected object")
            alpha = _expect(ld, "alpha", dict, f"network.lines[{i}]")
            lines.append(Line(
                id=_expect(ld, "id", str, f"network.lines[{i}]"),
                capacity=_num(ld, "capacity"),
                alpha={str(k): float(v) for k, v in alpha.items()},
            ))
        return cls(nodes=nodes, lines=lines)


@dataclass
class Instance:
    """A full problem instance: units, horizon, load, optional network."""

    units: list[Unit]
    horizon: int
    load: list[float]
    network: Network | None = None
    name: str = "instance"

    @property
    def n_units(self) -> int:
        return len(self.units)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "horizon": self.horizon,
            "load": list(self.load),
            "units": [u.to_dict() for u in self.units],
        }
        if self.network is not None:
            d["network"] = self.network.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "Instance":
        horizon = _int(d, "horizon")
        if "load" in d:
            load_raw = d["load"]
            if not isinstance(load_raw, list):
                raise InstanceFormatError("load: expected an array of numbers")
            load = [float(x) for x in load_raw]
        elif "load_csv" in d:
            path = Path(d["load_csv"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            load = _read_load_csv(path)
        else:
            raise InstanceFormatError("missing field: load (or load_csv)")
        units_raw = _expect(d, "units", list, "instance")
        units = [Unit.from_dict(u) for u in units_raw]
        network = None
        if d.get("network") is not None:
            network = Network.from_dict(d["network"])
        return cls(units=units, horizon=horizon, load=load, network=network,
                   name=str(d.get("name", "instance")))


def load_instance(path: str | Path) -> Instance:
    """Read an instance from a JSON file (see the README for the schema)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InstanceFormatError(
            f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: top level must be an object")
    return Instance.from_dict(doc, base_dir=path.parent)


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(instance.to_json())


@dataclass
class Schedule:
    """An on/off plan: ``on_off[i][t-1]`` is 1 when unit i runs in period t."""

    on_off: list[list[int]]

    def __post_init__(self):
        for row in self.on_off:
            if len(row) != len(self.on_off[0]):
                raise ValueError("all schedule rows must have equal length")
            for x in row:
                if x not in (0, 1):
                    raise ValueError(f"schedule entries must be 0/1, got {x!r}")

    @property
    def n_units(self) -> int:
        return len(self.on_off)

    @property
    def horizon(self) -> int:
        return len(self.on_off[0]) if self.on_off else 0


@dataclass
class CostBreakdown:
    """Total cost split into production and the two start-up components."""

    production: float
    startup_variable: float
    startup_fixed: float
    total: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        s = self.production + self.startup_variable + self.startup_fixed
        if self.total is None:
            self.total = s
        elif abs(self.total - s) > 1e-9:
            raise ValueError(f"inconsistent breakdown: total {self.total} != "
                             f"sum of parts {s}")


class InstanceFormatError(ValueError):
    """Raised when an instance document cannot be interpreted."""


def validate_instance(instance: Instance) -> list[str]:
    """Check every instance invariant; return the list of violations.

    An empty list means the instance is well-formed. Violations are data,
    not exceptions: each entry names the offending entity and the broken
    rule so a CLI can print them verbatim.
    """
    out: list[str] = []
    for u in instance.units:
        out.extend(u.violations())
    seen: set[str] = set()
    for u in instance.units:
        if u.id in seen:
            out.append(f"unit id {u.id!r} is not unique")
        seen.add(u.id)
    if len(instance.load) != instance.horizon:
        out.append(f"load length {len(instance.load)} != horizon {instance.horizon}")
    for t, val in enumerate(instance.load, start=1):
        if val < 0 or not math.isfinite(val):
            out.append(f"load[{t}] = {val} must be finite and >= 0")
    if instance.network is not None:
        out.extend(instance.network.violations())
        for u in instance.units:
            if u.node is None or u.node not in instance.network.nodes:
                out.append(f"unit {u.id}: node {u.node!r} is not declared "
                           f"in the network")
    return out


def offline_runs(schedule: Schedule, i: int, pre_offline: int
                 ) -> list[tuple[int, int]]:
    """Start events of unit ``i``: list of (start period, prior off-time).

    One entry per period t where the unit turns on after being off — that
    is, v(i,t) = 1 and either t > 1 with v(i,t-1) = 0, or t = 1 with
    ``pre_offline`` > 0. The off-time counts the consecutive offline
    periods immediately before t and includes the pre-horizon offline
    stretch whenever the offline run touches the horizon start.
    """
    if not (0 <= i < schedule.n_units):
        raise IndexError(f"unit index {i} out of range")
    row = schedule.on_off[i]
    runs: list[tuple[int, int]] = []
    for t in range(1, len(row) + 1):
        if row[t - 1] != 1:
            continue
        if t == 1:
            if pre_offline > 0:
                runs.append((1, pre_offline))
            continue
        if row[t - 2] == 1:
            continue
        # walk back over the offline stretch
        length = 0
        k = t - 1
        while k >= 1 and row[k - 1] == 0:
            length += 1
            k -= 1
        if k == 0:  # reached the horizon start: add pre-horizon offline time
            length += pre_offline
        runs.append((t, length))
    return runs


# --- small parsing helpers -------------------------------------------------

def _expect(d: dict, key: str, typ, where: str):
    if key not in d:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    v = d[key]
    if not isinstance(v, typ):
        raise InstanceFormatError(
            f"{where}.{key}: expected {typ.__name__}, got {type(v).__name__}")
    return v


def _num(d: dict, key: str) -> float:
    if key not in d:
        raise InstanceFormatError(f"missing field: {key}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(f"field {key}: expected a number, got {v!r}")
    return float(v)


def _int(d: dict, key: str, default: int | None = None) -> int:
    if key not in d:
        if default is not None:
            return default
        raise InstanceFormatError(f"missing field: {key}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise InstanceFormatError(f"field {key}: expected an integer, got {v!r}")
    return v


def _read_load_csv(path: Path) -> list[float]:
    out = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            try:
                out.append(float(row[0]))
            except ValueError as e:
                raise InstanceFormatError(
                    f"{path}:{lineno}: not a number: {row[0]!r}") from e
    return out
