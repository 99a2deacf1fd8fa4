"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
invalid instance/model/config), 3 solve failure (solver reported an
error, or no result was produced within the budget). A model that is
proven infeasible or unbounded is an *answer*, not a failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import (CSV_HEADER, BenchConfig, generate_instance, measure_gap,
                    run_benchmark)
from .domain import InstanceFormatError, load_instance, validate_instance
from .formulations import BASES, STARTUPS, FormulationChoice, build_model
from .milp import MpsParseError, read_mps, write_mps
from .oracle import certify_equivalence
from .solver import SolveConfig, solve_external, solve_mip
from .startup import approximate_steps

_DATA_ERRORS = (FileNotFoundError, IsADirectoryError, PermissionError,
                json.JSONDecodeError, InstanceFormatError, MpsParseError,
                ValueError, KeyError, TypeError)


def _load(path: str):
    try:
        return load_instance(path), None
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None, 2


def _choice(args) -> FormulationChoice:
    return FormulationChoice(base=args.base, startup=args.formulation,
                             ktol=args.ktol)


def _cmd_validate(args) -> int:
    inst, err = _load(args.instance)
    if inst is None:
        return err
    problems = validate_instance(inst)
    if problems:
        for p in problems:
            print(p)
        return 2
    print("OK")
    return 0


def _cmd_build(args) -> int:
    inst, err = _load(args.instance)
    if inst is None:
        return err
    try:
        model, _ = build_model(inst, _choice(args))
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(write_mps(model))
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}: {len(model.variables)} variables, "
          f"{len(model.constraints)} constraints")
    return 0


def _solve_config(args) -> SolveConfig:
    return SolveConfig(gap=args.gap, time_limit=args.time_limit,
                       backend=args.backend)


def _cmd_solve(args) -> int:
    path = args.input
    try:
        if path.lower().endswith(".mps"):
            with open(path, encoding="utf-8") as fh:
                model = read_mps(fh.read())
        else:
            inst, err = _load(path)
            if inst is None:
                return err
            model, _ = build_model(inst, _choice(args))
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = _solve_config(args)
    if config.backend == "reference":
        res = solve_mip(model, config)
    else:
        res = solve_external(model, config)
    print(f"status     {res.status}")
    print(f"objective  {res.objective!r}")
    print(f"bound      {res.best_bound!r}")
    print(f"nodes      {res.nodes}")
    if res.message:
        print(f"note       {res.message}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"# solution for {model.name}: {res.status}\n")
            for name in sorted(res.values):
                fh.write(f"{name} {res.values[name]!r}\n")
        print(f"solution written to {args.out}")
    if res.status == "error":
        return 3
    if res.status == "time_limit" and res.values == {}:
        return 3
    return 0


def _cmd_gap(args) -> int:
    inst, err = _load(args.instance)
    if inst is None:
        return err
    formulations = [f.strip() for f in args.formulations.split(",")
                    if f.strip()]
    for f in formulations:
        if f not in STARTUPS:
            print(f"error: unknown formulation {f!r}", file=sys.stderr)
            return 2
    config = BenchConfig(formulations=formulations, base=args.base,
                         ktols=[args.ktol], gap=args.gap,
                         time_limit=args.time_limit, backend=args.backend)
    print(CSV_HEADER)
    for f in formulations:
        row = measure_gap(inst, FormulationChoice(args.base, f, args.ktol),
                          config)
        print(",".join(repr(x) if isinstance(x, float) else str(x)
                       for x in row.to_list()))
    return 0


def _cmd_bench(args) -> int:
    try:
        config = BenchConfig.from_json(args.config)
        paths = run_benchmark(config, out_dir=args.out_dir)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for kind, p in paths.items():
        print(f"{kind}: {p}")
    return 0


def _cmd_approx(args) -> int:
    inst, err = _load(args.instance)
    if inst is None:
        return err
    try:
        for u in inst.units:
            # same pricing window the model builders use: horizon plus the
            # unit's recorded pre-horizon outage
            sf = approximate_steps(u, inst.horizon + u.pre_offline,
                                   args.ktol)
            print(f"{u.id}: {sf.n_steps} steps (ktol={args.ktol!r})")
            for s in sf.steps:
                rng = f"[{s.lo}, {s.hi}]" if s.lo != s.hi else f"[{s.lo}]"
                print(f"  off-time {rng}: {s.value!r}")
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_oracle(args) -> int:
    inst, err = _load(args.instance)
    if inst is None:
        return err
    try:
        report = certify_equivalence(inst, base=args.base, guard=args.guard)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["conclusive"] else 3


def _nonneg(text: str) -> float:
    val = float(text)
    if val < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return val


def _positive(text: str) -> float:
    val = float(text)
    if val <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return val


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ucbench",
        description="Unit commitment MILP builder and benchmark harness")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_formulation_flags(p, required=False):
        p.add_argument("--formulation", required=required, default="one_bin",
                       choices=STARTUPS)
        p.add_argument("--base", default="basic", choices=BASES)
        p.add_argument("--ktol", type=_nonneg, default=0.0)

    def add_solve_flags(p):
        p.add_argument("--gap", type=_nonneg, default=1e-6,
                       help="relative optimality gap target")
        p.add_argument("--time-limit", type=_positive, default=3600.0)
        p.add_argument("--backend", default="reference",
                       help="'reference' or an external command template "
                            "with {input} and {output} placeholders")

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("build", help="build a model and write MPS")
    p.add_argument("instance")
    add_formulation_flags(p, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("solve", help="solve an instance or an MPS model")
    p.add_argument("input", help="instance .json or model .mps")
    add_formulation_flags(p)
    add_solve_flags(p)
    p.add_argument("--out", default=None,
                   help="write the solution as 'name value' lines")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("gap", help="integrality gaps, CSV on stdout")
    p.add_argument("instance")
    p.add_argument("--formulations", required=True,
                   help="comma-separated subset of " + ",".join(STARTUPS))
    p.add_argument("--base", default="basic", choices=BASES)
    p.add_argument("--ktol", type=_nonneg, default=0.0)
    add_solve_flags(p)
    p.set_defaults(func=_cmd_gap)

    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("config", help="BenchConfig as JSON")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("approx", help="print per-unit step functions")
    p.add_argument("instance")
    p.add_argument("--ktol", type=_nonneg, default=0.0)
    p.set_defaults(func=_cmd_approx)

    p = sub.add_parser("oracle", help="certify formulation equivalence")
    p.add_argument("instance")
    p.add_argument("--base", default="basic", choices=BASES)
    p.add_argument("--guard", type=int, default=24,
                   help="enumeration size cap (units x periods)")
    p.set_defaults(func=_cmd_oracle)
    return ap


def cli(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage, 0 on --help
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except ValueError as exc:
        # flag values argparse cannot vet (negative gaps, zero budgets)
        # surface here; they are usage errors, not data errors
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
