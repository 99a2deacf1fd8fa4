"""Benchmark harness: synthetic instance generation, integrality-gap
measurement, and CSV/JSON report emission.

The normalized integrality gap of a model is (z_MIP - z_LP) / z_MIP,
where z_LP is the untightened root relaxation solved by the bundled
simplex (no cuts, no presolve), so gaps are comparable across start-up
modules and not polluted by solver-side tightening.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .domain import Instance, Line, Network, Unit, load_instance
from .formulations import STARTUPS, FormulationChoice, build_model
from .solver import SolveConfig, solve_external, solve_lp, solve_mip

__all__ = ["BenchConfig", "GapRow", "generate_instance", "measure_gap",
           "run_benchmark"]

CSV_HEADER = ("instance,formulation,ktol,z_mip,z_lp,gap_abs,gap_rel,"
              "wall_ms,nodes,status,backend")


def generate_instance(seed: int, n_units: int, T: int,
                      volatility: float = 0.3,
                      with_network: bool = False) -> Instance:
    """Deterministic synthetic instance.

    Unit parameters are drawn uniformly from fixed ranges: p_max in
    [50, 1000] MW, p_min in [0.3, 0.6]·p_max, ramp_up = ramp_down in
    [1.0, 1.5]·(p_max - p_min) (a unit can sweep its whole dispatchable
    range in one period, which keeps dispatch separable per period — the
    enumeration oracle relies on this), start/stop speeds at p_min,
    min_up/min_down in [1, 8], heat_loss in [0.02, 0.7], fixed online
    cost A in [1, 5] with start-up energy cost V in [0.5, 3]·(A·24) and
    start-up fixed cost F in [0.1, 0.5]·V, variable cost in [1, 4].
    All units enter the horizon online (pre_offline = 0), so every
    in-horizon start has an off-time the step table covers exactly.

    The load is a 24-period sinusoid (random phase) plus
    volatility-scaled uniform noise, clipped to [0.3, 0.95]·Σp_max.

    With ``with_network`` a star grid is added: one hub plus one node
    per unit, uniform demand factors, and one line per spoke whose flow
    equals the spoke's net injection. Capacities are drawn tight enough
    to restrict peak-period dispatch but never below the spoke's own
    peak demand (an offline unit must stay importable).
    """
    if n_units < 1:
        raise ValueError(f"n_units must be >= 1, got {n_units}")
    if T < 2:
        raise ValueError(f"horizon must be >= 2, got {T}")
    if not 0.0 <= volatility <= 1.0:
        raise ValueError(f"volatility must lie in [0, 1], got {volatility}")
    rng = Random(seed)
    units = []
    for k in range(1, n_units + 1):
        p_max = rng.uniform(50.0, 1000.0)
        p_min = rng.uniform(0.3, 0.6) * p_max
        ramp = rng.uniform(1.0, 1.5) * (p_max - p_min)
        a = rng.uniform(1.0, 5.0)
        v = rng.uniform(0.5, 3.0) * (a * 24.0)
        units.append(Unit(
            id=f"u{k}", p_min=p_min, p_max=p_max, ramp_up=ramp,
            ramp_down=ramp, startup_ramp=p_min, shutdown_ramp=p_min,
            min_up=rng.randint(1, 8), min_down=rng.randint(1, 8),
            cost_fixed_on=a, cost_variable=rng.uniform(1.0, 4.0),
            startup_var_cost=v, startup_fixed_cost=rng.uniform(0.1, 0.5) * v,
            heat_loss=rng.uniform(0.02, 0.7), pre_offline=0,
            node=f"n{k}" if with_network else None))
    total = sum(u.p_max for u in units)
    mid, amp = 0.625 * total, 0.275 * total
    phase = rng.uniform(0.0, 2.0 * math.pi)
    load = []
    for t in range(T):
        x = mid + amp * math.sin(2.0 * math.pi * t / 24.0 + phase)
        x += volatility * amp * rng.uniform(-1.0, 1.0)
        load.append(min(max(x, 0.3 * total), 0.95 * total))
    network = None
    if with_network:
        peak = max(load)
        gamma = 1.0 / (n_units + 1)
        nodes = {"hub": gamma}
        nodes.update({f"n{k}": gamma for k in range(1, n_units + 1)})
        lines = []
        for k, u in enumerate(units, 1):
            cap = rng.uniform(0.93, 0.97) * (u.p_max - gamma * peak)
            cap = max(cap, 1.1 * gamma * peak)
            lines.append(Line(id=f"l{k}", capacity=cap,
                              alpha={f"n{k}": 1.0}))
        network = Network(nodes=nodes, lines=lines)
    name = f"gen-s{seed}-u{n_units}-t{T}" + ("-net" if with_network else "")
    return Instance(name=name, horizon=T, load=load, units=units,
                    network=network)


@dataclass
class GapRow:
    """One benchmark measurement; column order mirrors CSV_HEADER."""

    instance: str
    formulation: str
    ktol: float
    z_mip: float
    z_lp: float
    gap_abs: float
    gap_rel: float
    wall_ms: float
    nodes: int
    status: str
    backend: str

    def to_list(self) -> list:
        return [self.instance, self.formulation, self.ktol, self.z_mip,
                self.z_lp, self.gap_abs, self.gap_rel, self.wall_ms,
                self.nodes, self.status, self.backend]


@dataclass
class BenchConfig:
    """What to run: instances (file paths and/or generator specs),
    formulations, step tolerances, and solve budget.

    ``generate`` entries are dicts with keys seed, n_units, T and
    optional volatility, with_network. ``record_timing`` keeps wall_ms
    at 0 when off so reports are byte-deterministic across runs.
    """

    instances: list = field(default_factory=list)
    generate: list = field(default_factory=list)
    formulations: list = field(default_factory=lambda: list(STARTUPS))
    base: str = "basic"
    ktols: list = field(default_factory=lambda: [0.0, 0.05, 0.20])
    gap: float = 0.01
    time_limit: float = 60.0
    backend: str = "reference"
    out_prefix: str = "bench"
    record_timing: bool = False

    def __post_init__(self):
        if not self.formulations:
            raise ValueError("formulation list must not be empty")
        for f in self.formulations:
            if f not in STARTUPS:
                raise ValueError(f"unknown formulation {f!r}; expected "
                                 f"subset of {STARTUPS}")
        if self.base not in ("basic", "extended"):
            raise ValueError(f"unknown base {self.base!r}")
        for k in self.ktols:
            if k < 0:
                raise ValueError(f"ktol must be >= 0, got {k}")

    @classmethod
    def from_json(cls, path) -> "BenchConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


def measure_gap(instance: Instance, choice: FormulationChoice,
                config: BenchConfig) -> GapRow:
    """Build one model, solve its root relaxation and the MIP, and emit
    a report row. The LP bound always comes from the bundled simplex
    even when an external backend solves the MIP."""
    t0 = time.perf_counter()
    model, _ = build_model(instance, choice)
    lp = solve_lp(model)
    z_lp = lp.objective if lp.status == "optimal" else math.nan
    cfg = SolveConfig(gap=config.gap, time_limit=config.time_limit,
                      backend=config.backend)
    if config.backend == "reference":
        mip = solve_mip(model, cfg)
    else:
        mip = solve_external(model, cfg)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    z_mip = mip.objective
    gap_abs = z_mip - z_lp
    if math.isnan(gap_abs):
        gap_rel = math.nan
    elif abs(z_mip) > 1e-9:
        gap_rel = gap_abs / z_mip
    else:
        gap_rel = 0.0 if abs(gap_abs) <= 1e-9 else math.nan
    return GapRow(instance=instance.name, formulation=choice.startup,
                  ktol=choice.ktol, z_mip=z_mip, z_lp=z_lp,
                  gap_abs=gap_abs, gap_rel=gap_rel,
                  wall_ms=wall_ms if config.record_timing else 0.0,
                  nodes=mip.nodes, status=mip.status,
                  backend=config.backend)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run_benchmark(config: BenchConfig, out_dir: str = ".") -> dict:
    """Measure every (instance, formulation, ktol) combination and write
    ``<prefix>.csv`` (rows), ``<prefix>_summary.csv`` (instances solved
    within budget, per horizon), and ``<prefix>.json`` (both, mirrored).
    Per-row failures are recorded as rows with status ``error`` and the
    run continues. Returns {"csv": path, "summary": path, "json": path}.
    """
    instances: list[Instance] = [load_instance(p) for p in config.instances]
    for spec in config.generate:
        instances.append(generate_instance(
            seed=spec["seed"], n_units=spec["n_units"], T=spec["T"],
            volatility=spec.get("volatility", 0.3),
            with_network=spec.get("with_network", False)))
    rows: list[GapRow] = []
    horizon_of = {inst.name: inst.horizon for inst in instances}
    for inst in instances:
        for formulation in config.formulations:
            for ktol in config.ktols:
                choice = FormulationChoice(config.base, formulation, ktol)
                try:
                    rows.append(measure_gap(inst, choice, config))
                except Exception as exc:  # record, keep going
                    rows.append(GapRow(
                        instance=inst.name, formulation=formulation,
                        ktol=ktol, z_mip=math.nan, z_lp=math.nan,
                        gap_abs=math.nan, gap_rel=math.nan, wall_ms=0.0,
                        nodes=0, status=f"error: {exc}",
                        backend=config.backend))
    rows.sort(key=lambda r: (r.instance, r.formulation, r.ktol))

    solved = {}
    for r in rows:
        h = horizon_of[r.instance]
        n_rows, n_solved = solved.get(h, (0, 0))
        ok = r.status in ("optimal", "gap_reached")
        solved[h] = (n_rows + 1, n_solved + (1 if ok else 0))
    summary = [{"horizon": h, "n_rows": n, "n_solved": s}
               for h, (n, s) in sorted(solved.items())]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{config.out_prefix}.csv"
    sum_path = out / f"{config.out_prefix}_summary.csv"
    json_path = out / f"{config.out_prefix}.json"

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in rows:
        writer.writerow([_fmt(x) for x in r.to_list()])
    csv_path.write_text(buf.getvalue(), encoding="utf-8")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["horizon", "n_rows", "n_solved"])
    for line in summary:
        writer.writerow([line["horizon"], line["n_rows"], line["n_solved"]])
    sum_path.write_text(buf.getvalue(), encoding="utf-8")

    def clean(row: GapRow) -> dict:
        d = dict(vars(row))
        for k, v in d.items():
            if isinstance(v, float) and math.isnan(v):
                d[k] = None  # strict-JSON stand-in for NaN
        return d

    payload = {"config": dict(vars(config)),
               "rows": [clean(r) for r in rows], "summary": summary}
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True)
                         + "\n", encoding="utf-8")
    return {"csv": str(csv_path), "summary": str(sum_path),
            "json": str(json_path)}
