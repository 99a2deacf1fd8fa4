"""Solver-agnostic linear model container and exchange-format I/O.

A :class:`Model` is an ordered collection of bounded variables, linear
constraints, and a minimization objective. It knows nothing about unit
commitment; the formulation builders produce models, the bundled solver
and the MPS/LP writers consume them.

Determinism is a design requirement: models store their terms in a
canonical order (sorted by variable id within each row, zero coefficients
dropped), so :func:`write_mps` is a pure function of the model and
``read_mps(write_mps(m))`` reproduces ``m`` exactly — names, order,
coefficients, bounds, and kinds. The exchange grammars are documented in
``docs/mps-format.md`` and ``docs/lp-format.md``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

INF = math.inf

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]{0,254}\Z")

SENSES = ("<=", "=", ">=")
_SENSE_TO_ROW = {"<=": "L", "=": "E", ">=": "G"}
_ROW_TO_SENSE = {v: k for k, v in _SENSE_TO_ROW.items()}


class ModelError(ValueError):
    """Raised for malformed model construction (names, bounds, references)."""


class MpsParseError(ValueError):
    """Raised by :func:`read_mps`; message carries a 1-based line number."""


def _check_name(name: str, what: str) -> str:
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise ModelError(
            f"invalid {what} name {name!r}: must match "
            "[A-Za-z][A-Za-z0-9_]* and be at most 255 characters")
    return name


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    kind: str  # "continuous" | "binary"


class Constraint:
    """A linear row: terms stored as parallel (ids, coeffs) numpy arrays."""

    __slots__ = ("name", "ids", "coeffs", "sense", "rhs")

    def __init__(self, name: str, ids: np.ndarray, coeffs: np.ndarray,
                 sense: str, rhs: float):
        self.name = name
        self.ids = ids
        self.coeffs = coeffs
        self.sense = sense
        self.rhs = rhs

    def __eq__(self, other):
        return (isinstance(other, Constraint)
                and self.name == other.name
                and self.sense == other.sense
                and self.rhs == other.rhs
                and np.array_equal(self.ids, other.ids)
                and np.array_equal(self.coeffs, other.coeffs))

    def __repr__(self):
        return (f"Constraint({self.name!r}, {len(self.ids)} terms, "
                f"{self.sense} {self.rhs})")


@dataclass
class ModelStats:
    n_variables: int
    n_constraints: int
    n_binary: int
    n_nonzeros: int  # constraint-matrix entries only (objective excluded)


class Model:
    """Ordered variables + constraints + minimization objective.

    Single-writer: build it up with :meth:`add_variable` /
    :meth:`add_constraint` / :meth:`set_objective`, then freeze (any
    write/solve freezes implicitly) and share freely — frozen models are
    immutable.
    """

    def __init__(self, name: str = "model"):
        self.name = _check_name(name, "model")
        self.objective_name = "COST"
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.frozen = False
        self._var_ids: dict[str, int] = {}
        self._con_names: set[str] = set()

    # -- construction -------------------------------------------------

    def add_variable(self, name: str, lb: float, ub: float,
                     kind: str = "continuous") -> int:
        if self.frozen:
            raise ModelError("model is frozen")
        _check_name(name, "variable")
        if name in self._var_ids:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind not in ("continuous", "binary"):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == "binary" and (lb, ub) != (0, 1):
            raise ModelError(
                f"binary variable {name!r} must be created with bounds "
                f"[0, 1], got [{lb}, {ub}]")
        if lb > ub:
            raise ModelError(f"variable {name!r}: inverted bounds "
                             f"[{lb}, {ub}]")
        vid = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), kind))
        self._var_ids[name] = vid
        return vid

    def add_constraint(self, name: str, terms, sense: str, rhs: float) -> int:
        """Append a row. ``terms`` is a dict {var id: coeff} or a sequence
        of (var id, coeff) pairs referencing distinct, declared variables.
        Terms are stored sorted by variable id with zero coefficients
        dropped (the canonical order the MPS round trip preserves)."""
        if self.frozen:
            raise ModelError("model is frozen")
        _check_name(name, "constraint")
        if name in self._con_names or name == self.objective_name:
            raise ModelError(f"duplicate constraint name {name!r}")
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}; expected one of {SENSES}")
        items = list(terms.items()) if isinstance(terms, dict) else list(terms)
        ids = np.fromiter((i for i, _ in items), dtype=np.int64,
                          count=len(items))
        coeffs = np.fromiter((float(c) for _, c in items), dtype=np.float64,
                             count=len(items))
        if len(ids):
            if ids.min() < 0 or ids.max() >= len(self.variables):
                raise ModelError(
                    f"constraint {name!r} references an undeclared variable")
            order = np.argsort(ids, kind="stable")
            ids = ids[order]
            coeffs = coeffs[order]
            if len(ids) > 1 and (ids[1:] == ids[:-1]).any():
                raise ModelError(
                    f"constraint {name!r} repeats a variable; combine "
                    "coefficients before adding")
            keep = coeffs != 0.0
            if not keep.all():
                ids, coeffs = ids[keep], coeffs[keep]
        cid = len(self.constraints)
        self.constraints.append(Constraint(name, ids, coeffs, sense, float(rhs)))
        self._con_names.add(name)
        return cid

    def _add_prepared(self, name: str, ids: np.ndarray, coeffs: np.ndarray,
                      sense: str, rhs: float) -> int:
        """Trusted fast path for bulk builders: ``ids`` must already be a
        sorted, duplicate-free int64 array of declared variable ids and
        ``coeffs`` a float64 array with no zeros. Skips the per-row
        validation of :meth:`add_constraint` — large model families (one
        row per unit, period, and off-time) are built through this."""
        if self.frozen:
            raise ModelError("model is frozen")
        if name in self._con_names or name == self.objective_name:
            raise ModelError(f"duplicate constraint name {name!r}")
        cid = len(self.constraints)
        self.constraints.append(Constraint(name, ids, coeffs, sense,
                                           float(rhs)))
        self._con_names.add(name)
        return cid

    def add_objective_terms(self, coeffs) -> None:
        """Merge terms into the objective (coefficients of variables already
        present are summed). Lets builders contribute costs incrementally."""
        if self.frozen:
            raise ModelError("model is frozen")
        if not isinstance(coeffs, dict):
            coeffs = dict(coeffs)
        merged = dict(self.objective)
        for vid, c in coeffs.items():
            if not (0 <= vid < len(self.variables)):
                raise ModelError(f"objective references undeclared variable "
                                 f"id {vid}")
            merged[vid] = merged.get(vid, 0.0) + float(c)
        self.objective = {vid: c for vid in sorted(merged)
                          if (c := merged[vid]) != 0.0}

    def set_objective(self, coeffs) -> None:
        """Replace the (minimization) objective. Zero terms are dropped and
        the mapping is stored in variable-id order."""
        if self.frozen:
            raise ModelError("model is frozen")
        if not isinstance(coeffs, dict):
            coeffs = dict(coeffs)
        for vid in coeffs:
            if not (0 <= vid < len(self.variables)):
                raise ModelError(f"objective references undeclared variable "
                                 f"id {vid}")
        self.objective = {vid: float(c) for vid in sorted(coeffs)
                          if (c := coeffs[vid]) != 0.0}

    def freeze(self) -> "Model":
        self.frozen = True
        return self

    # -- queries --------------------------------------------------------

    def var_id(self, name: str) -> int:
        try:
            return self._var_ids[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def objective_value(self, values: dict[str, float]) -> float:
        """Evaluate the objective on a {variable name: value} mapping."""
        return sum(c * values.get(self.variables[vid].name, 0.0)
                   for vid, c in self.objective.items())

    def __eq__(self, other):
        return (isinstance(other, Model)
                and self.name == other.name
                and self.objective_name == other.objective_name
                and self.variables == other.variables
                and self.constraints == other.constraints
                and self.objective == other.objective)

    def __repr__(self):
        return (f"Model({self.name!r}, {self.n_variables} vars, "
                f"{self.n_constraints} rows)")


def fix_variables(model: Model, assignments: dict) -> Model:
    """Copy ``model`` with both bounds of each assigned variable set to its
    value. Keys may be variable names or ids; binaries only accept 0/1,
    and any value must lie inside the variable's current bounds."""
    resolved: dict[int, float] = {}
    for key, val in assignments.items():
        vid = model.var_id(key) if isinstance(key, str) else int(key)
        if not (0 <= vid < model.n_variables):
            raise ModelError(f"unknown variable id {vid}")
        var = model.variables[vid]
        val = float(val)
        if var.kind == "binary" and val not in (0.0, 1.0):
            raise ModelError(
                f"cannot fix binary {var.name!r} to non-0/1 value {val}")
        if val < var.lb or val > var.ub:
            raise ModelError(
                f"value {val} for {var.name!r} outside bounds "
                f"[{var.lb}, {var.ub}]")
        resolved[vid] = val
    out = Model(model.name)
    out.objective_name = model.objective_name
    for vid, var in enumerate(model.variables):
        if vid in resolved:
            v = resolved[vid]
            out.variables.append(Variable(var.name, v, v, var.kind))
        else:
            out.variables.append(Variable(var.name, var.lb, var.ub, var.kind))
        out._var_ids[var.name] = vid
    out.constraints = list(model.constraints)  # rows are immutable, share them
    out._con_names = set(model._con_names)
    out.objective = dict(model.objective)
    return out


def model_stats(model: Model) -> ModelStats:
    """Exact size counts; nonzeros cover the constraint matrix only."""
    return ModelStats(
        n_variables=model.n_variables,
        n_constraints=model.n_constraints,
        n_binary=sum(1 for v in model.variables if v.kind == "binary"),
        n_nonzeros=sum(len(c.ids) for c in model.constraints),
    )


# ---------------------------------------------------------------------------
# number formatting
# ---------------------------------------------------------------------------
# All numbers are emitted with 17 significant digits, enough for exact
# float round-trips.

def _fmt(x: float) -> str:
    return format(x, ".17g")


# ---------------------------------------------------------------------------
# MPS writer
# ---------------------------------------------------------------------------

def write_mps(model: Model) -> str:
    """Emit the model as free-format MPS text (byte-deterministic).

    Sections: NAME, ROWS (single N row first), COLUMNS (column-major, one
    row/value pair per line, binary runs bracketed by INTORG/INTEND
    markers), RHS (nonzero only), BOUNDS (canonical minimal set; BV for
    [0,1] binaries), ENDATA. A variable that appears in no row and has no
    objective coefficient is kept alive by an explicit zero objective
    entry (the parser drops zero coefficients, so round trips are exact).
    """
    model.freeze()
    nvar = model.n_variables
    lines: list[str] = [f"NAME {model.name}", "ROWS",
                        f" N {model.objective_name}"]
    for con in model.constraints:
        lines.append(f" {_SENSE_TO_ROW[con.sense]} {con.name}")

    # transpose the row-major storage into column-major entry order
    lines.append("COLUMNS")
    if model.constraints:
        lengths = np.fromiter((len(c.ids) for c in model.constraints),
                              dtype=np.int64, count=len(model.constraints))
        total = int(lengths.sum())
    else:
        lengths = np.zeros(0, dtype=np.int64)
        total = 0
    if total:
        cols_flat = np.concatenate([c.ids for c in model.constraints])
        vals_flat = np.concatenate([c.coeffs for c in model.constraints])
        rows_flat = np.repeat(np.arange(len(model.constraints)), lengths)
        order = np.lexsort((rows_flat, cols_flat))
        cols_sorted = cols_flat[order]
        rows_sorted = rows_flat[order].tolist()
        vals_sorted = vals_flat[order].tolist()
        col_starts = np.searchsorted(cols_sorted, np.arange(nvar + 1)).tolist()
    else:
        rows_sorted = vals_sorted = []
        col_starts = [0] * (nvar + 1)

    con_names = [c.name for c in model.constraints]
    obj_name = model.objective_name
    integer_mode = False
    for vid, var in enumerate(model.variables):
        is_bin = var.kind == "binary"
        if is_bin and not integer_mode:
            lines.append("    MARKER 'MARKER' 'INTORG'")
            integer_mode = True
        elif not is_bin and integer_mode:
            lines.append("    MARKER 'MARKER' 'INTEND'")
            integer_mode = False
        a, b = col_starts[vid], col_starts[vid + 1]
        obj = model.objective.get(vid)
        vname = var.name
        if obj is not None:
            lines.append(f"    {vname} {obj_name} {_fmt(obj)}")
        elif a == b:
            # empty column: keep the variable alive with a zero entry
            lines.append(f"    {vname} {obj_name} 0")
        for k in range(a, b):
            lines.append(f"    {vname} {con_names[rows_sorted[k]]} "
                         f"{format(vals_sorted[k], '.17g')}")
    if integer_mode:
        lines.append("    MARKER 'MARKER' 'INTEND'")

    lines.append("RHS")
    for con in model.constraints:
        if con.rhs != 0.0:
            lines.append(f"    RHS {con.name} {_fmt(con.rhs)}")

    lines.append("BOUNDS")
    for var in model.variables:
        lines.extend(_bound_lines(var))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def _bound_lines(var: Variable) -> list[str]:
    lb, ub, name = var.lb, var.ub, var.name
    if var.kind == "binary" and lb == 0.0 and ub == 1.0:
        return [f" BV BND {name}"]
    if lb == ub:
        return [f" FX BND {name} {_fmt(lb)}"]
    out = []
    if lb == -INF and ub == INF:
        return [f" FR BND {name}"]
    if lb == -INF:
        out.append(f" MI BND {name}")
    elif lb != 0.0:
        out.append(f" LO BND {name} {_fmt(lb)}")
    if ub != INF:
        out.append(f" UP BND {name} {_fmt(ub)}")
    return out


# ---------------------------------------------------------------------------
# MPS parser
# ---------------------------------------------------------------------------

_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA",
             "RANGES", "OBJSENSE", "SOS"}


def read_mps(text: str) -> Model:
    """Parse free-format MPS text produced by :func:`write_mps` (and the
    common subset of foreign files). Unsupported features — RANGES, SOS,
    general (non-binary) integers, multiple objective rows — raise
    :class:`MpsParseError` with the offending line number."""
    model = Model("model")
    section = None
    objective_name: str | None = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    row_terms: dict[str, list[tuple[int, float]]] = {}
    row_rhs: dict[str, float] = {}
    objective: dict[int, float] = {}
    # column state
    col_ids: dict[str, int] = {}
    col_kind: dict[int, str] = {}
    col_bounds: dict[int, list[float]] = {}
    bounds_seen: dict[int, set[str]] = {}
    obj_cols_seen: set[int] = set()
    integer_mode = False
    model_name = "model"
    saw_endata = False
    lineno = 0

    def err(lineno: int, msg: str):
        raise MpsParseError(f"line {lineno}: {msg}")

    def parse_value(tok: str, lineno: int) -> float:
        try:
            return float(tok)
        except ValueError:
            err(lineno, f"not a number: {tok!r}")

    def get_col(name: str) -> int:
        if name in col_ids:
            return col_ids[name]
        cid = len(col_ids)
        col_ids[name] = cid
        # a column's kind is set by its first appearance (BV bounds may
        # still promote it to binary later)
        col_kind[cid] = "binary" if integer_mode else "continuous"
        return cid

    def add_entry(cid: int, row: str, value: float, lineno: int):
        if row == objective_name:
            if cid in obj_cols_seen:
                err(lineno, f"duplicate objective entry for a column")
            obj_cols_seen.add(cid)
            if value != 0.0:
                objective[cid] = value
            return
        if row not in row_sense:
            err(lineno, f"unknown row {row!r}")
        if value != 0.0:
            row_terms[row].append((cid, value))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        tokens = raw.split()
        if not raw[0].isspace() and tokens[0] in _SECTIONS:
            section = tokens[0]
            if section == "RANGES":
                err(lineno, "unsupported section: RANGES")
            if section in ("OBJSENSE", "SOS"):
                err(lineno, f"unsupported section: {section}")
            if section == "NAME":
                if len(tokens) > 1:
                    model_name = tokens[1]
            if section == "ENDATA":
                saw_endata = True
                break
            continue
        if not raw[0].isspace() and tokens[0] not in _SECTIONS:
            err(lineno, f"unknown section {tokens[0]!r}")
        if section == "ROWS":
            if len(tokens) != 2:
                err(lineno, f"expected 'type name', got {raw.strip()!r}")
            rtype, rname = tokens
            if rtype == "N":
                if objective_name is not None:
                    err(lineno, "multiple objective (N) rows")
                objective_name = rname
            elif rtype in _ROW_TO_SENSE:
                if rname in row_sense or rname == objective_name:
                    err(lineno, f"duplicate row name {rname!r}")
                row_sense[rname] = _ROW_TO_SENSE[rtype]
                row_order.append(rname)
                row_terms[rname] = []
            else:
                err(lineno, f"unknown row type {rtype!r}")
        elif section == "COLUMNS":
            if objective_name is None:
                err(lineno, "COLUMNS before an N row was declared")
            if len(tokens) >= 2 and tokens[1] == "'MARKER'":
                if "'INTORG'" in tokens:
                    integer_mode = True
                elif "'INTEND'" in tokens:
                    integer_mode = False
                else:
                    err(lineno, f"unrecognized marker line {raw.strip()!r}")
                continue
            if len(tokens) not in (3, 5):
                err(lineno, "expected 'column row value' "
                            "(optionally twice per line)")
            cid = get_col(tokens[0])
            add_entry(cid, tokens[1], parse_value(tokens[2], lineno), lineno)
            if len(tokens) == 5:
                add_entry(cid, tokens[3], parse_value(tokens[4], lineno), lineno)
        elif section == "RHS":
            if len(tokens) not in (3, 5):
                err(lineno, "expected 'setname row value' "
                            "(optionally twice per line)")
            for row, val in zip(tokens[1::2], tokens[2::2]):
                if row == objective_name:
                    err(lineno, "objective constants are not supported")
                if row not in row_sense:
                    err(lineno, f"unknown row {row!r}")
                if row in row_rhs:
                    err(lineno, f"duplicate RHS entry for row {row!r}")
                row_rhs[row] = parse_value(val, lineno)
        elif section == "BOUNDS":
            if len(tokens) < 3:
                err(lineno, f"malformed bound line {raw.strip()!r}")
            btype, _, cname = tokens[0], tokens[1], tokens[2]
            if cname not in col_ids:
                err(lineno, f"bound for undeclared column {cname!r}")
            cid = col_ids[cname]
            if cid not in col_bounds:
                col_bounds[cid] = [0.0, INF]
            seen = bounds_seen.setdefault(cid, set())
            if btype in seen:
                err(lineno, f"duplicate {btype} bound for column {cname!r}")
            seen.add(btype)
            b = col_bounds[cid]
            if btype in ("LO", "UP", "FX"):
                if len(tokens) != 4:
                    err(lineno, f"{btype} bound requires a value")
                val = parse_value(tokens[3], lineno)
                if btype == "LO":
                    b[0] = val
                elif btype == "UP":
                    b[1] = val
                else:
                    b[0] = b[1] = val
            elif btype == "MI":
                b[0] = -INF
            elif btype == "PL":
                b[1] = INF
            elif btype == "FR":
                b[0], b[1] = -INF, INF
            elif btype == "BV":
                b[0], b[1] = 0.0, 1.0
                col_kind[cid] = "binary"
            else:
                err(lineno, f"unknown bound type {btype!r}")
        elif section is None:
            err(lineno, f"data before any section header: {raw.strip()!r}")
        elif section == "NAME":
            err(lineno, f"unexpected data in NAME section: {raw.strip()!r}")

    if not saw_endata:
        raise MpsParseError(f"line {lineno}: missing ENDATA")
    if objective_name is None:
        raise MpsParseError("line 0: no objective (N) row")

    try:
        model = Model(model_name)
        model.objective_name = objective_name
        names_by_id = sorted(col_ids, key=col_ids.get)
        for cid, cname in enumerate(names_by_id):
            lb, ub = col_bounds.get(cid, [0.0, INF])
            kind = col_kind[cid]
            if kind == "binary":
                ok = (lb, ub) in ((0.0, 1.0), (0.0, 0.0), (1.0, 1.0))
                if not ok:
                    raise MpsParseError(
                        f"integer column {cname!r} has bounds [{lb}, {ub}]; "
                        "only binary variables are supported")
            _check_name(cname, "variable")
            model.variables.append(Variable(cname, lb, ub, kind))
            model._var_ids[cname] = cid
        for rname in row_order:
            terms = row_terms[rname]
            ids = np.fromiter((i for i, _ in terms), dtype=np.int64,
                              count=len(terms))
            coeffs = np.fromiter((c for _, c in terms), dtype=np.float64,
                                 count=len(terms))
            if len(ids) > 1:
                order = np.argsort(ids, kind="stable")
                ids, coeffs = ids[order], coeffs[order]
                if (ids[1:] == ids[:-1]).any():
                    raise MpsParseError(
                        f"row {rname!r} has duplicate entries for a column")
            _check_name(rname, "constraint")
            model.constraints.append(Constraint(
                rname, ids, coeffs, row_sense[rname], row_rhs.get(rname, 0.0)))
            model._con_names.add(rname)
        model.objective = dict(sorted(objective.items()))
    except ModelError as e:
        raise MpsParseError(str(e)) from e
    return model


# ---------------------------------------------------------------------------
# LP writer (for human inspection; no reader)
# ---------------------------------------------------------------------------

def write_lp(model: Model) -> str:
    """Emit the model in CPLEX LP text form (Minimize / Subject To /
    Bounds / Binary / End)."""
    model.freeze()
    out = [f"\\ Problem: {model.name}", "Minimize"]
    out.append(f" {model.objective_name}: "
               + _lp_expr(model, list(model.objective.items())))
    out.append("Subject To")
    for con in model.constraints:
        op = {"<=": "<=", "=": "=", ">=": ">="}[con.sense]
        expr = _lp_expr(model, list(zip(con.ids.tolist(), con.coeffs.tolist())))
        out.append(f" {con.name}: {expr} {op} {_fmt(con.rhs)}")
    bounds = []
    for var in model.variables:
        if var.kind == "binary" and (var.lb, var.ub) == (0.0, 1.0):
            continue
        if var.lb == var.ub:
            bounds.append(f" {var.name} = {_fmt(var.lb)}")
        elif var.lb == -INF and var.ub == INF:
            bounds.append(f" {var.name} free")
        else:
            lo = "-inf" if var.lb == -INF else _fmt(var.lb)
            hi = "+inf" if var.ub == INF else _fmt(var.ub)
            if var.ub == INF:
                if var.lb != 0.0:
                    bounds.append(f" {var.name} >= {lo}")
            else:
                bounds.append(f" {lo} <= {var.name} <= {hi}")
    if bounds:
        out.append("Bounds")
        out.extend(bounds)
    binaries = [v.name for v in model.variables if v.kind == "binary"]
    if binaries:
        out.append("Binary")
        out.extend(f" {n}" for n in binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def _lp_expr(model: Model, terms: list[tuple[int, float]]) -> str:
    if not terms:
        return "0"
    parts = []
    for k, (vid, c) in enumerate(terms):
        name = model.variables[vid].name
        if k == 0:
            parts.append(f"{_fmt(c)} {name}" if c >= 0
                         else f"- {_fmt(-c)} {name}")
        else:
            parts.append(f"+ {_fmt(c)} {name}" if c >= 0
                         else f"- {_fmt(-c)} {name}")
    return " ".join(parts)
