"""Bundled exact LP/MIP solver and the external-solver bridge.

The LP engine is a bounded-variable revised primal simplex over a dense
basis inverse. Phase I is the composite method: instead of artificial
variables it minimizes the total bound violation of the current basic
solution, which lets branch-and-bound warm-start every child node from
its parent's basis. No presolve, no scaling, no cuts — formulation
comparisons need the raw constraint systems, so the solver must not
tighten anything behind the model's back.

MIP solving is best-first branch-and-bound on binary variables, fully
deterministic: node selection by (bound, creation index), branching on
the most fractional binary with ties to the lowest variable index.

``solve_external`` ships a model to any command-line solver via MPS and
reads the solution back from a file (two-column text or an XML-like
format, auto-detected).
"""

from __future__ import annotations

import heapq
import logging
import math
import shlex
import subprocess
import tempfile
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .milp import INF, Model, write_mps

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
INT_TOL = 1e-6
REFACTOR_EVERY = 64


@dataclass
class SolveConfig:
    """Knobs shared by the LP, MIP, and external entry points."""

    gap: float = 1e-6            # relative MIP gap target (0 = prove optimal)
    time_limit: float = 3600.0   # seconds
    backend: str = "reference"   # "reference" or an external command template

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError(f"gap must be >= 0, got {self.gap}")
        if self.time_limit <= 0:
            raise ValueError(f"time limit must be > 0, got {self.time_limit}")


@dataclass
class Solution:
    """Outcome of a solve: status, objective, bound, variable values."""

    status: str                      # optimal | infeasible | unbounded |
                                     # gap_reached | time_limit | error
    objective: float = math.nan
    best_bound: float = math.nan
    values: dict[str, float] = field(default_factory=dict)
    nodes: int = 0
    iterations: int = 0
    message: str = ""


# ---------------------------------------------------------------------------
# simplex core
# ---------------------------------------------------------------------------

_BASIC, _AT_LOWER, _AT_UPPER, _AT_FREE = 0, 1, 2, 3


@dataclass
class _LpResult:
    status: str
    objective: float
    x: np.ndarray | None          # structural variable values
    basis: np.ndarray | None      # for warm starts
    vstat: np.ndarray | None
    iterations: int
    message: str = ""


class LpCore:
    """Standard-form data for one model: min c'x, A x + s = b, l <= . <= u.

    One slack column per row carries the sense through its bounds
    (<= : s in [0, inf), >= : s in (-inf, 0], = : s fixed at 0). The core
    is built once per model; repeated solves may override the structural
    bounds (how branch-and-bound fixes binaries) and reuse everything.
    """

    def __init__(self, model: Model):
        model.freeze()
        self.model = model
        m = model.n_constraints
        ns = model.n_variables
        self.n_struct = ns
        self.m = m
        A = np.zeros((m, ns + m))
        b = np.empty(m)
        for r, con in enumerate(model.constraints):
            A[r, con.ids] = con.coeffs
            b[r] = con.rhs
            A[r, ns + r] = 1.0
        self.A = A
        self.b = b
        c = np.zeros(ns + m)
        for vid, coeff in model.objective.items():
            c[vid] = coeff
        self.c = c
        lo = np.empty(ns + m)
        up = np.empty(ns + m)
        for vid, var in enumerate(model.variables):
            lo[vid], up[vid] = var.lb, var.ub
        for r, con in enumerate(model.constraints):
            if con.sense == "<=":
                lo[ns + r], up[ns + r] = 0.0, INF
            elif con.sense == ">=":
                lo[ns + r], up[ns + r] = -INF, 0.0
            else:
                lo[ns + r], up[ns + r] = 0.0, 0.0
        self.lo = lo
        self.up = up
        self.binary_ids = np.array(
            [vid for vid, v in enumerate(model.variables) if v.kind == "binary"],
            dtype=np.int64)

    def solve(self, lo: np.ndarray | None = None, up: np.ndarray | None = None,
              warm: tuple[np.ndarray, np.ndarray] | None = None) -> _LpResult:
        l = self.lo if lo is None else lo
        u = self.up if up is None else up
        return _simplex(self.A, self.b, self.c, l, u, warm)

    def struct_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Fresh copies of the full bound vectors, for per-node overrides."""
        return self.lo.copy(), self.up.copy()


def _cold_start(A, lo, up):
    """Slack basis; structural variables rest at their bound nearest zero."""
    m, n = A.shape
    ns = n - m
    basis = np.arange(ns, n, dtype=np.int64)
    vstat = np.empty(n, dtype=np.int8)
    for j in range(ns):
        if lo[j] > -INF:
            vstat[j] = _AT_LOWER
        elif up[j] < INF:
            vstat[j] = _AT_UPPER
        else:
            vstat[j] = _AT_FREE
    vstat[ns:] = _BASIC
    return basis, vstat


def _nonbasic_values(vstat, lo, up):
    x = np.zeros(len(vstat))
    at_l = vstat == _AT_LOWER
    at_u = vstat == _AT_UPPER
    x[at_l] = lo[at_l]
    x[at_u] = up[at_u]
    return x


def _simplex(A, b, c, lo, up, warm=None) -> _LpResult:
    """Bounded-variable primal simplex with composite (violation-driven)
    Phase I, Dantzig pricing, and a Bland fallback against cycling."""
    m, n = A.shape
    if np.any(lo > up):
        return _LpResult("infeasible", math.nan, None, None, None, 0,
                         "empty variable domain")
    if m == 0:
        # pure box problem: each variable sits at its cheapest bound
        x = np.where(c > 0, lo, np.where(c < 0, up, _nearest_finite(lo, up)))
        if np.any((c > 0) & (lo == -INF)) or np.any((c < 0) & (up == INF)):
            return _LpResult("unbounded", -INF, None, None, None, 0)
        basis = np.zeros(0, dtype=np.int64)
        vstat = np.where(np.isfinite(lo) & (x == lo), _AT_LOWER,
                         np.where(np.isfinite(up) & (x == up), _AT_UPPER,
                                  _AT_FREE)).astype(np.int8)
        return _LpResult("optimal", float(c @ x), x, basis, vstat, 0)

    basis, vstat = None, None
    if warm is not None:
        basis, vstat = warm[0].copy(), warm[1].copy()
        if (len(basis) != m or len(np.unique(basis)) != m
                or basis.min() < 0 or basis.max() >= n):
            basis, vstat = None, None
    if basis is None:
        basis, vstat = _cold_start(A, lo, up)

    Binv = _factorize(A, basis)
    if Binv is None:  # degenerate warm basis; restart cold
        basis, vstat = _cold_start(A, lo, up)
        Binv = _factorize(A, basis)
        if Binv is None:
            return _LpResult("error", math.nan, None, None, None, 0,
                             "singular slack basis")

    xN = _nonbasic_values(vstat, lo, up)
    xB = Binv @ (b - A @ xN)

    max_iter = 10000 + 200 * (m + n)
    stall_limit = 10 * (m + n)
    bland = False
    stalled = 0
    last_obj = math.inf
    since_refactor = 0
    fresh = True  # Binv/xB just recomputed from scratch
    iters = 0
    movable = (up - lo) > 0  # fixed columns never enter
    ckpt = (basis.copy(), vstat.copy())  # last verified-invertible basis
    restores = 0

    def refreshed():
        """Refactorize the current basis. A drifted Binv can accept a
        pivot that is zero in exact arithmetic, leaving an exactly
        singular basis behind; in that case restore the last good
        checkpoint and force Bland's rule so the replayed trajectory
        diverges from the poisoned one."""
        nonlocal basis, vstat, restores, bland, ckpt
        B = _factorize(A, basis)
        if B is None:
            if restores >= 5:
                return None
            restores += 1
            bland = True
            basis = ckpt[0].copy()
            vstat = ckpt[1].copy()
            B = _factorize(A, basis)  # checkpoint inverted fine before
            if B is None:  # pragma: no cover - inversion is deterministic
                return None
        ckpt = (basis.copy(), vstat.copy())
        return B

    while True:
        if iters >= max_iter:
            return _LpResult("error", math.nan, None, None, None, iters,
                             "iteration limit exceeded")
        lb_B, ub_B = lo[basis], up[basis]
        below = xB < lb_B - FEAS_TOL
        above = xB > ub_B + FEAS_TOL
        phase1 = bool(below.any() or above.any())

        if phase1:
            d = np.zeros(m)
            d[below] = -1.0
            d[above] = 1.0
            y = d @ Binv
            rc = -(y @ A)
            obj_now = float((lb_B[below] - xB[below]).sum()
                            + (xB[above] - ub_B[above]).sum())
        else:
            y = c[basis] @ Binv
            rc = c - y @ A
            obj_now = float(c[basis] @ xB + c @ xN)

        # entering candidates: improving, movable, nonbasic
        can_inc = (vstat == _AT_LOWER) | (vstat == _AT_FREE)
        can_dec = (vstat == _AT_UPPER) | (vstat == _AT_FREE)
        improving = ((can_inc & (rc < -OPT_TOL)) | (can_dec & (rc > OPT_TOL))) \
            & movable

        if not improving.any():
            if not fresh:
                # refresh the factorization and double-check before exiting
                Binv = refreshed()
                if Binv is None:
                    return _LpResult("error", math.nan, None, None, None,
                                     iters, "basis became singular")
                xN = _nonbasic_values(vstat, lo, up)
                xB = Binv @ (b - A @ xN)
                since_refactor = 0
                fresh = True
                continue
            if phase1:
                return _LpResult("infeasible", math.nan, None, basis, vstat,
                                 iters)
            return _finish(A, b, c, lo, up, basis, vstat, xB, iters)

        if bland:
            q = int(np.flatnonzero(improving)[0])
        else:
            scores = np.where(improving, np.abs(rc), -1.0)
            q = int(np.argmax(scores))  # first max -> lowest index on ties
        sigma = 1.0 if rc[q] < 0 else -1.0

        w = Binv @ A[:, q]
        rate = -sigma * w  # d x_B / d step

        # ratio test: first breakpoint among basic bounds and the entering
        # variable's own opposite bound
        limits = np.full(m, INF)
        feas = ~(below | above)
        pos = rate > PIVOT_TOL
        neg = rate < -PIVOT_TOL
        mask = feas & pos & (ub_B < INF)
        limits[mask] = (ub_B[mask] - xB[mask]) / rate[mask]
        mask = feas & neg & (lb_B > -INF)
        limits[mask] = (lb_B[mask] - xB[mask]) / rate[mask]
        mask = below & pos
        limits[mask] = (lb_B[mask] - xB[mask]) / rate[mask]
        mask = above & neg
        limits[mask] = (ub_B[mask] - xB[mask]) / rate[mask]
        np.maximum(limits, 0.0, out=limits)

        own = up[q] - lo[q] if (lo[q] > -INF and up[q] < INF) else INF
        r = int(np.argmin(limits))
        step = float(limits[r])
        if own < step:
            # bound flip: the entering variable crosses to its other bound
            xB -= sigma * own * w
            vstat[q] = _AT_UPPER if vstat[q] == _AT_LOWER else _AT_LOWER
            xN[q] = up[q] if vstat[q] == _AT_UPPER else lo[q]
            iters += 1
            fresh = False
            stalled, last_obj, bland = _stall(obj_now, last_obj, stalled,
                                              stall_limit, bland)
            continue
        if not np.isfinite(step):
            if phase1:
                return _LpResult("error", math.nan, None, None, None, iters,
                                 "no breakpoint in phase-one direction")
            return _LpResult("unbounded", -INF, None, basis, vstat, iters)

        # tie-break among rows reaching the minimum: largest pivot for
        # stability (Bland mode: lowest variable index for termination)
        ties = np.flatnonzero(limits <= step + 1e-12)
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(w[ties]))])

        leave = int(basis[r])
        # which bound the leaving variable lands on
        if below[r] or (feas[r] and rate[r] < 0):
            vstat[leave] = _AT_LOWER
            xN[leave] = lo[leave]
        else:
            vstat[leave] = _AT_UPPER
            xN[leave] = up[leave]

        enter_val = (xN[q] if vstat[q] != _AT_FREE else 0.0) + sigma * step
        xB -= sigma * step * w
        xB[r] = enter_val
        vstat[q] = _BASIC
        xN[q] = 0.0
        basis[r] = q

        piv = w[r]
        if abs(piv) < PIVOT_TOL:
            Binv = refreshed()
            if Binv is None:
                return _LpResult("error", math.nan, None, None, None, iters,
                                 "singular basis after pivot")
            xN = _nonbasic_values(vstat, lo, up)
            xB = Binv @ (b - A @ xN)
            since_refactor = 0
        else:
            row = Binv[r] / piv
            Binv -= np.outer(w, row)
            Binv[r] = row
            since_refactor += 1

        iters += 1
        fresh = False
        if since_refactor >= REFACTOR_EVERY:
            Binv = refreshed()
            if Binv is None:
                return _LpResult("error", math.nan, None, None, None, iters,
                                 "basis became singular")
            xN = _nonbasic_values(vstat, lo, up)
            xB = Binv @ (b - A @ xN)
            since_refactor = 0
        stalled, last_obj, bland = _stall(obj_now, last_obj, stalled,
                                          stall_limit, bland)


def _stall(obj_now, last_obj, stalled, stall_limit, bland):
    if obj_now < last_obj - 1e-12 * (1.0 + abs(last_obj)):
        return 0, obj_now, bland
    stalled += 1
    if stalled > stall_limit and not bland:
        log.debug("simplex: switching to Bland's rule after %d stalled "
                  "iterations", stalled)
        return 0, obj_now, True
    return stalled, min(obj_now, last_obj), bland


def _factorize(A, basis):
    try:
        return np.linalg.inv(A[:, basis])
    except np.linalg.LinAlgError:
        return None


def _nearest_finite(lo, up):
    out = np.zeros(len(lo))
    only_up = (lo == -INF) & (up < INF)
    out[only_up] = np.minimum(up[only_up], 0.0)
    only_lo = lo > -INF
    out[only_lo] = np.maximum(lo[only_lo], 0.0)
    both = (lo > -INF) & (up < INF)
    out[both] = np.clip(0.0, lo[both], up[both])
    return out


def _finish(A, b, c, lo, up, basis, vstat, xB, iters) -> _LpResult:
    m, n = A.shape
    x = _nonbasic_values(vstat, lo, up)
    x[basis] = xB
    drift = float(np.max(np.abs(x - np.clip(x, lo, up)), initial=0.0))
    if drift > 1e-7:
        return _LpResult("error", math.nan, None, basis, vstat, iters,
                         f"solution violates bounds by {drift:g}")
    np.clip(x, lo, up, out=x)
    resid = float(np.max(np.abs(A @ x - b), initial=0.0))
    if resid > 1e-6 * (1.0 + float(np.max(np.abs(b), initial=0.0))):
        return _LpResult("error", math.nan, None, basis, vstat, iters,
                         f"row residual {resid:g} after solve")
    ns = n - m
    return _LpResult("optimal", float(c @ x), x[:ns], basis, vstat, iters)


# ---------------------------------------------------------------------------
# public LP / MIP entry points
# ---------------------------------------------------------------------------

def _to_solution(core: LpCore, res: _LpResult) -> Solution:
    values = {}
    if res.x is not None:
        names = [v.name for v in core.model.variables]
        values = dict(zip(names, res.x.tolist()))
    obj = res.objective if res.status == "optimal" else math.nan
    return Solution(status=res.status, objective=obj,
                    best_bound=obj if res.status == "optimal" else math.nan,
                    values=values, nodes=0, iterations=res.iterations,
                    message=res.message)


def solve_lp(model: Model, config: SolveConfig | None = None) -> Solution:
    """Solve the LP relaxation (integrality ignored; bounds kept)."""
    core = model if isinstance(model, LpCore) else LpCore(model)
    res = core.solve()
    sol = _to_solution(core, res)
    if res.status == "unbounded":
        sol.best_bound = -INF
    return sol


def solve_mip(model: Model, config: SolveConfig | None = None) -> Solution:
    """Best-first branch-and-bound over the model's binary variables.

    Deterministic: nodes are keyed by (LP bound of the parent, creation
    index); the branch variable is the most fractional binary, ties going
    to the lowest variable id. Child LPs warm-start from the parent basis.
    """
    config = config or SolveConfig()
    core = model if isinstance(model, LpCore) else LpCore(model)
    t0 = time.monotonic()

    lo0, up0 = core.struct_bounds()
    bin_ids = core.binary_ids
    incumbent = math.inf
    incumbent_x: np.ndarray | None = None
    nodes_solved = 0
    counter = 0
    # heap entries: (parent LP bound, creation index, lo, up, warm basis);
    # the counter breaks bound ties deterministically and keeps heapq from
    # ever comparing the array payloads
    heap: list = [(-INF, counter, lo0, up0, None)]
    stop: str | None = None   # why the loop broke, if early
    best_open = math.inf      # bound of the best node left unexplored

    while heap:
        bound, _, lo, up, warm = heapq.heappop(heap)
        if bound >= incumbent - 1e-9 * max(1.0, abs(incumbent)):
            continue  # cannot improve the incumbent; neither can the rest,
                      # but draining the heap here is cheap and simple
        if incumbent < math.inf and config.gap > 0:
            gap_now = (incumbent - bound) / max(abs(incumbent), 1e-9)
            if gap_now <= config.gap:
                stop, best_open = "gap_reached", bound
                break
        if time.monotonic() - t0 > config.time_limit:
            stop, best_open = "time_limit", bound
            break

        res = core.solve(lo, up, warm)
        nodes_solved += 1
        if res.status == "infeasible":
            continue
        if res.status == "unbounded":
            # binaries are bounded, so unboundedness lives in the relaxation
            return Solution(status="unbounded", best_bound=-INF,
                            nodes=nodes_solved, message=res.message)
        if res.status != "optimal":
            return Solution(status="error", nodes=nodes_solved,
                            message=f"node LP failed: {res.message}")
        if res.objective >= incumbent - 1e-9 * max(1.0, abs(incumbent)):
            continue

        xb = res.x[bin_ids] if len(bin_ids) else np.zeros(0)
        frac = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        if not len(frac) or frac.max() <= INT_TOL:
            incumbent = res.objective
            incumbent_x = res.x
            continue
        j = int(bin_ids[np.argmax(frac)])  # argmax: lowest index wins ties
        for val in (0.0, 1.0):
            lo2, up2 = lo.copy(), up.copy()
            lo2[j] = up2[j] = val
            counter += 1
            heapq.heappush(
                heap, (res.objective, counter, lo2, up2,
                       (res.basis, res.vstat)))

    if incumbent < math.inf:
        values = dict(zip((v.name for v in core.model.variables),
                          incumbent_x.tolist()))
        for vid in bin_ids:  # snap near-integral binaries for reporting
            name = core.model.variables[vid].name
            values[name] = float(round(values[name]))
        if stop is None:  # tree exhausted: the incumbent is proven optimal
            return Solution(status="optimal", objective=incumbent,
                            best_bound=incumbent, values=values,
                            nodes=nodes_solved)
        return Solution(status=stop, objective=incumbent,
                        best_bound=min(best_open, incumbent), values=values,
                        nodes=nodes_solved)
    if stop == "time_limit":
        return Solution(status="time_limit", best_bound=best_open,
                        nodes=nodes_solved)
    return Solution(status="infeasible", nodes=nodes_solved,
                    message="no feasible binary assignment")


# ---------------------------------------------------------------------------
# external solver bridge
# ---------------------------------------------------------------------------

def solve_external(model: Model, config: SolveConfig) -> Solution:
    """Write MPS, run the configured command, read the solution file back.

    The backend is a command template with ``{input}`` and ``{output}``
    placeholders, e.g. ``mysolver {input} --write {output}``. The command
    must exit 0 and leave a solution file at ``{output}`` in either
    supported dialect (see docs/solution-formats.md). The objective is
    recomputed from the model — the file's own claim is not trusted.
    """
    template = config.backend
    if template == "reference" or "{input}" not in template \
            or "{output}" not in template:
        return Solution(status="error",
                        message="external backend needs a command template "
                                "with {input} and {output} placeholders")
    model.freeze()
    with tempfile.TemporaryDirectory(prefix="ucbench-") as tmp:
        in_path = Path(tmp) / "model.mps"
        out_path = Path(tmp) / "solution.out"
        in_path.write_text(write_mps(model))
        cmd = [part.format(input=str(in_path), output=str(out_path))
               for part in shlex.split(template)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True,
                                  timeout=config.time_limit)
        except (OSError, subprocess.TimeoutExpired) as e:
            return Solution(status="error",
                            message=f"backend failed to run: {e}")
        if proc.returncode != 0:
            return Solution(status="error",
                            message=f"backend exited {proc.returncode}: "
                                    f"{proc.stderr.strip()[:500]}")
        if not out_path.exists():
            return Solution(status="error",
                            message=f"backend wrote no solution file "
                                    f"at {out_path}")
        try:
            parsed = parse_solution_file(out_path.read_text())
        except SolutionParseError as e:
            return Solution(status="error",
                            message=f"unparseable solution file: {e}")

    known = {v.name: v for v in model.variables}
    values: dict[str, float] = {}
    for name, val in parsed.items():
        if name not in known:
            log.warning("solution file names unknown variable %r; ignored",
                        name)
            continue
        values[name] = val
    missing = [n for n in known if n not in values]
    for name in missing:
        values[name] = 0.0
    if missing:
        log.warning("solution file missing %d variable(s) (e.g. %r); "
                    "defaulting to 0", len(missing), missing[0])

    for name, val in values.items():
        var = known[name]
        if val < var.lb - 1e-7 or val > var.ub + 1e-7:
            return Solution(
                status="error", values=values,
                message=f"value {val} for {name} violates bounds "
                        f"[{var.lb}, {var.ub}]")
    obj = model.objective_value(values)
    return Solution(status="optimal", objective=obj, best_bound=obj,
                    values=values,
                    message="objective recomputed from model; optimality "
                            "as claimed by backend")


class SolutionParseError(ValueError):
    pass


def parse_solution_file(text: str) -> dict[str, float]:
    """Parse an external solution file; dialect by first non-space byte.

    ``<`` opens the XML-like dialect (every element carrying both a
    ``name`` and a ``value`` attribute is taken as a variable). Anything
    else is two-column text: ``name value`` per line, ``#`` comments.
    """
    stripped = text.lstrip()
    if stripped.startswith("<"):
        try:
            root = ET.fromstring(text)
        except ET.ParseError as e:
            raise SolutionParseError(f"bad XML: {e}") from e
        out = {}
        nodes = [root] + list(root.iter())
        for el in nodes:
            name = el.get("name")
            val = el.get("value")
            if name is None or val is None:
                continue
            try:
                out[name] = float(val)
            except ValueError:
                raise SolutionParseError(
                    f"element {name!r} has non-numeric value {val!r}")
        return out
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise SolutionParseError(
                f"line {lineno}: expected 'name value', got {line!r}")
        try:
            out[tokens[0]] = float(tokens[1])
        except ValueError:
            raise SolutionParseError(
                f"line {lineno}: not a number: {tokens[1]!r}")
    return out
