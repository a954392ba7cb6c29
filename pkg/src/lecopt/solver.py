"""Embedded exact MILP solver.

A two-phase primal simplex on the bounded-variable form handles the LP
relaxations; a best-first branch-and-bound over the binary columns closes
integrality. A complementarity fast path returns at the root node whenever
the relaxation already keeps buy/sell and charge/discharge pairs
complementary, which is the common case for this problem family.

Dense tableaus are deliberate: case-study problems stay in the hundreds of
columns. Determinism is a contract: identical problems yield identical
solutions, pivot for pivot (Dantzig pricing with index tie-breaks, Bland's
rule engaged after degenerate stretches).
"""

from __future__ import annotations

import enum
import heapq
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from lecopt.model import MilpProblem

FEAS_TOL = 1e-7
INT_TOL = 1e-6
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_STREAK_FOR_BLAND = 100
REFRESH_EVERY = 128


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT_REACHED = "limit_reached"


@dataclass(frozen=True)
class LpSolution:
    status: Status
    x: tuple[float, ...] | None
    objective: float | None
    iterations: int


@dataclass(frozen=True)
class MilpSolution:
    status: Status
    x: tuple[float, ...] | None
    objective: float | None
    iterations: int
    node_count: int
    gap: float | None


@dataclass(frozen=True)
class SolveConfig:
    feas_tol: float = FEAS_TOL
    int_tol: float = INT_TOL
    node_limit: int | None = None
    time_limit: float | None = None


@dataclass(frozen=True)
class SolutionViolation:
    kind: str  # "row", "bound", "integrality"
    name: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind} {self.name}: {self.message}"


@dataclass(frozen=True)
class ViolationReport:
    violations: tuple[SolutionViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(str(v) for v in self.violations)


class _Dense:
    """Row-major dense image of a MilpProblem, shared across B&B nodes."""

    def __init__(self, problem: MilpProblem):
        m, n = problem.num_rows, problem.num_cols
        self.m, self.n = m, n
        self.A = np.zeros((m, n))
        self.rhs = np.zeros(m)
        self.senses: list[str] = []
        for i, row in enumerate(problem.rows):
            for col, coef in row.coeffs:
                self.A[i, col] += coef
            self.rhs[i] = row.rhs
            self.senses.append(row.sense)
        self.c = np.asarray(problem.objective, dtype=float)
        self.lb = np.asarray(problem.lb, dtype=float)
        self.ub = np.asarray(problem.ub, dtype=float)
        self.constant = problem.objective_constant


def _simplex(dense: _Dense, lb_n: np.ndarray, ub_n: np.ndarray) -> tuple[Status, np.ndarray | None, int]:
    """Two-phase bounded-variable primal simplex.

    Returns (status, structural solution, iteration count). `lb_n`/`ub_n`
    are the node bounds for structural columns.
    """
    m, n = dense.m, dense.n
    # Extended columns: structural | one slack per row | artificials appended on demand.
    N = n + m
    lb = np.concatenate([lb_n, np.zeros(m)])
    ub = np.concatenate([ub_n, np.zeros(m)])
    for i, sense in enumerate(dense.senses):
        if sense == "<=":
            lb[n + i], ub[n + i] = 0.0, math.inf
        elif sense == ">=":
            lb[n + i], ub[n + i] = -math.inf, 0.0
        else:
            lb[n + i], ub[n + i] = 0.0, 0.0
    if np.any(lb > ub + 1e-12):
        return Status.INFEASIBLE, None, 0

    # Nonbasic start: every column at a finite bound (free columns at 0).
    x = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    ub = np.maximum(ub, lb)  # guard equal-bound rounding

    A_ext = np.hstack([dense.A, np.eye(m)])
    resid = dense.rhs - A_ext @ x  # required slack adjustment per row

    basis = np.empty(m, dtype=int)
    art_cols: list[int] = []
    art_sign: list[float] = []
    xB = np.zeros(m)
    need_art = np.zeros(m, dtype=bool)
    for i in range(m):
        s = n + i
        target = x[s] + resid[i]
        if lb[s] - 1e-12 <= target <= ub[s] + 1e-12:
            basis[i] = s
            xB[i] = min(max(target, lb[s]), ub[s])
        else:
            # Clip the slack to its nearest bound; an artificial covers the rest.
            clipped = min(max(target, lb[s]), ub[s])
            x[s] = clipped
            need_art[i] = True
    for i in np.nonzero(need_art)[0]:
        r = dense.rhs[i] - A_ext[i] @ x
        art_cols.append(N + len(art_cols))
        art_sign.append(1.0 if r >= 0 else -1.0)
        basis[i] = art_cols[-1]
        xB[i] = abs(r)
    n_art = len(art_cols)
    if n_art:
        art_block = np.zeros((m, n_art))
        for k, i in enumerate(np.nonzero(need_art)[0]):
            art_block[i, k] = art_sign[k]
        A_ext = np.hstack([A_ext, art_block])
        lb = np.concatenate([lb, np.zeros(n_art)])
        ub = np.concatenate([ub, np.full(n_art, math.inf)])
        x = np.concatenate([x, xB[need_art]])
    N_tot = N + n_art

    in_basis = np.zeros(N_tot, dtype=bool)
    in_basis[basis] = True
    T = A_ext.copy()
    # The starting basis is diag(+-1): slack rows carry +1, artificial rows
    # carry their sign. Scale those rows so T = B^-1 A holds from the start.
    for k, i in enumerate(np.nonzero(need_art)[0]):
        if art_sign[k] < 0:
            T[i] *= -1.0

    iterations = 0

    def run_phase(c_phase: np.ndarray, frozen: np.ndarray) -> Status:
        nonlocal iterations, T, xB
        d = c_phase - c_phase[basis] @ T
        degenerate_streak = 0
        since_refresh = 0
        max_iter = 20000 + 50 * N_tot
        while True:
            iterations += 1
            if iterations > max_iter:
                raise RuntimeError("simplex iteration limit exceeded")
            bland = degenerate_streak >= DEGENERATE_STREAK_FOR_BLAND

            at_lb = ~in_basis & ~frozen & np.isfinite(lb) & (np.abs(x - lb) < 1e-11)
            at_ub = ~in_basis & ~frozen & np.isfinite(ub) & (np.abs(x - ub) < 1e-11) & ~at_lb
            free = ~in_basis & ~frozen & ~at_lb & ~at_ub
            fixed = np.isfinite(lb) & np.isfinite(ub) & (ub - lb < 1e-12)
            improve = np.zeros(N_tot)
            sel = at_lb & ~fixed & (d < -DUAL_TOL)
            improve[sel] = -d[sel]
            sel = at_ub & ~fixed & (d > DUAL_TOL)
            improve[sel] = d[sel]
            sel = free & (np.abs(d) > DUAL_TOL)
            improve[sel] = np.abs(d[sel])
            candidates = np.nonzero(improve > 0)[0]
            if candidates.size == 0:
                return Status.OPTIMAL
            if bland:
                j = int(candidates[0])
            else:
                best = improve[candidates].max()
                j = int(candidates[improve[candidates] >= best][0])
            sign = 1.0 if d[j] < 0 else -1.0

            y = T[:, j]
            incr = -sign * y  # change of basic values per unit step
            lbB, ubB = lb[basis], ub[basis]
            limits = np.full(m, math.inf)
            dec = incr < -PIVOT_TOL
            limits[dec] = (xB[dec] - lbB[dec]) / (-incr[dec])
            inc = incr > PIVOT_TOL
            limits[inc] = (ubB[inc] - xB[inc]) / incr[inc]
            limits = np.maximum(limits, 0.0)
            own = ub[j] - lb[j] if (np.isfinite(ub[j]) and np.isfinite(lb[j])) else math.inf

            t_row = limits.min() if m else math.inf
            t_step = min(t_row, own)
            if not np.isfinite(t_step):
                return Status.UNBOUNDED
            degenerate_streak = degenerate_streak + 1 if t_step <= 1e-12 else 0

            if own <= t_row:
                # Bound flip: entering runs to its opposite bound, basis unchanged.
                xB += incr * own
                x[j] = ub[j] if sign > 0 else lb[j]
            else:
                t_step = t_row
                cand = np.nonzero(limits <= t_step + 1e-9)[0]
                mags = np.abs(incr[cand])
                strong = cand[mags >= mags.max() * 0.5]
                r = int(strong[np.argmin(basis[strong])]) if not bland else int(cand[np.argmin(basis[cand])])
                leave = basis[r]
                xB += incr * t_step
                entering_val = x[j] + sign * t_step
                x[leave] = lb[leave] if incr[r] < 0 else ub[leave]
                if not np.isfinite(x[leave]):
                    x[leave] = xB[r]  # leaving at an infinite bound cannot happen; guard
                piv = T[r, j]
                Tr = T[r] / piv
                colj = T[:, j].copy()
                colj[r] = 0.0
                T -= np.outer(colj, Tr)
                T[r] = Tr
                d -= d[j] * Tr
                xB[r] = entering_val
                basis[r] = j
                in_basis[leave] = False
                in_basis[j] = True
                since_refresh += 1
                if since_refresh >= REFRESH_EVERY:
                    d = c_phase - c_phase[basis] @ T
                    since_refresh = 0
            x[basis] = xB

    frozen = np.zeros(N_tot, dtype=bool)
    if n_art:
        c1 = np.zeros(N_tot)
        c1[N:] = 1.0
        status = run_phase(c1, frozen)
        x[basis] = xB
        infeas = float(x[N:].sum()) if n_art else 0.0
        if status is not Status.OPTIMAL or infeas > 1e-7:
            return Status.INFEASIBLE, None, iterations
        # Artificials are pinned at zero for phase 2.
        lb[N:] = 0.0
        ub[N:] = 0.0
        frozen = np.zeros(N_tot, dtype=bool)
        frozen[N:] = ~in_basis[N:]

    c2 = np.zeros(N_tot)
    c2[:n] = dense.c
    status = run_phase(c2, frozen)
    if status is Status.UNBOUNDED:
        return Status.UNBOUNDED, None, iterations
    x[basis] = xB
    if n_art and float(np.abs(x[N:]).sum()) > 1e-7:
        return Status.INFEASIBLE, None, iterations
    sol = x[:n].copy()
    np.clip(sol, lb_n, ub_n, out=sol)
    return Status.OPTIMAL, sol, iterations


def solve_lp(problem: MilpProblem, relax_binaries: bool = True) -> LpSolution:
    """Solve the LP (relaxation) of a problem.

    With `relax_binaries` the binary columns become continuous in [0, 1];
    without it the problem must not contain binaries.
    """
    if not relax_binaries and problem.binaries:
        raise ValueError("problem has binary columns; pass relax_binaries=True")
    dense = _Dense(problem)
    status, x, iters = _simplex(dense, dense.lb.copy(), dense.ub.copy())
    if status is not Status.OPTIMAL:
        return LpSolution(status, None, None, iters)
    obj = float(dense.c @ x) + dense.constant
    return LpSolution(Status.OPTIMAL, tuple(x), obj, iters)


def verify_solution(
    problem: MilpProblem,
    x,
    feas_tol: float = 1e-6,
    int_tol: float = INT_TOL,
) -> ViolationReport:
    """Independent re-check of every row, bound, and binary integrality.

    Works from the sparse problem data only; shares no state with the
    simplex. An empty report is required before any settlement is produced.
    """
    xs = np.asarray(x, dtype=float)
    out: list[SolutionViolation] = []
    if xs.shape != (problem.num_cols,):
        return ViolationReport(
            (SolutionViolation("bound", "solution", f"length {xs.shape} != {problem.num_cols} columns"),)
        )
    for row in problem.rows:
        lhs = sum(coef * xs[col] for col, coef in row.coeffs)
        resid = lhs - row.rhs
        bad = (
            (row.sense == "=" and abs(resid) > feas_tol)
            or (row.sense == "<=" and resid > feas_tol)
            or (row.sense == ">=" and resid < -feas_tol)
        )
        if bad:
            out.append(SolutionViolation("row", row.name, f"lhs {lhs:.9g} {row.sense} rhs {row.rhs:.9g} violated by {resid:.3g}"))
    for j in range(problem.num_cols):
        if xs[j] < problem.lb[j] - feas_tol:
            out.append(SolutionViolation("bound", problem.col_name(j), f"{xs[j]:.9g} below lower bound {problem.lb[j]:.9g}"))
        if xs[j] > problem.ub[j] + feas_tol:
            out.append(SolutionViolation("bound", problem.col_name(j), f"{xs[j]:.9g} above upper bound {problem.ub[j]:.9g}"))
    for j in sorted(problem.binaries):
        if abs(xs[j] - round(xs[j])) > int_tol:
            out.append(SolutionViolation("integrality", problem.col_name(j), f"value {xs[j]:.9g} not within {int_tol:g} of an integer"))
    return ViolationReport(tuple(out))


def _try_fast_path(
    problem: MilpProblem,
    dense: _Dense,
    x: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    int_tol: float,
) -> np.ndarray | None:
    """Round binaries off a complementary relaxation solution.

    Valid only when binaries carry no objective weight: the rounded point
    then shares the relaxation objective, so it is optimal.
    """
    binaries = sorted(problem.binaries)
    if any(dense.c[j] != 0.0 for j in binaries):
        return None
    for a, bcol in problem.complementary_pairs:
        if abs(x[a] * x[bcol]) > 1e-9:
            return None
    rounded = x.copy()
    linked = set()
    for bin_col, cont_col in problem.binary_links:
        rounded[bin_col] = 1.0 if x[cont_col] > 1e-9 else 0.0
        linked.add(bin_col)
    for j in binaries:
        if j not in linked:
            rounded[j] = float(round(x[j]))
    for j in binaries:
        if rounded[j] < lb[j] - 1e-12 or rounded[j] > ub[j] + 1e-12:
            return None
    if not verify_solution(problem, rounded, feas_tol=1e-6, int_tol=int_tol).ok:
        return None
    return rounded


def _fractional_binaries(problem: MilpProblem, x: np.ndarray, int_tol: float) -> list[int]:
    return [j for j in sorted(problem.binaries) if abs(x[j] - round(x[j])) > int_tol]


def solve_milp(problem: MilpProblem, config: SolveConfig | None = None) -> MilpSolution:
    """Exact branch-and-bound over the binary columns.

    Best-first on the parent LP bound; branching on the most fractional
    binary, lowest column index on ties. Returns LIMIT_REACHED with the
    incumbent and remaining gap when node or time limits bite.
    """
    cfg = config or SolveConfig()
    dense = _Dense(problem)
    t_start = time.monotonic()
    total_iters = 0
    node_count = 0

    incumbent: np.ndarray | None = None
    incumbent_obj = math.inf

    counter = 0
    heap: list[tuple[float, int, dict[int, float], dict[int, float]]] = [(-math.inf, counter, {}, {})]
    lower_bound = math.inf  # best bound among open nodes, set after root solve
    limit_hit = False

    while heap:
        bound, _, fix_lb, fix_ub = heapq.heappop(heap)
        if incumbent is not None and bound >= incumbent_obj - 1e-9:
            break  # best-first: every open node is at least this bound
        if cfg.node_limit is not None and node_count >= cfg.node_limit:
            limit_hit = True
            lower_bound = min(bound, incumbent_obj) if bound > -math.inf else lower_bound
            break
        if cfg.time_limit is not None and time.monotonic() - t_start > cfg.time_limit:
            limit_hit = True
            lower_bound = min(bound, incumbent_obj) if bound > -math.inf else lower_bound
            break
        node_count += 1

        lb = dense.lb.copy()
        ub = dense.ub.copy()
        for j, v in fix_lb.items():
            lb[j] = max(lb[j], v)
        for j, v in fix_ub.items():
            ub[j] = min(ub[j], v)

        status, x, iters = _simplex(dense, lb, ub)
        total_iters += iters
        if status is Status.UNBOUNDED:
            return MilpSolution(Status.UNBOUNDED, None, None, total_iters, node_count, None)
        if status is not Status.OPTIMAL:
            continue
        node_obj = float(dense.c @ x) + dense.constant
        if node_count == 1:
            lower_bound = node_obj
        if incumbent is not None and node_obj >= incumbent_obj - 1e-9:
            continue

        fractional = _fractional_binaries(problem, x, cfg.int_tol)
        if not fractional:
            snapped = x.copy()
            for j in problem.binaries:
                snapped[j] = float(round(snapped[j]))
            if node_obj < incumbent_obj:
                incumbent, incumbent_obj = snapped, node_obj
            continue

        fast = _try_fast_path(problem, dense, x, lb, ub, cfg.int_tol)
        if fast is not None:
            if node_obj < incumbent_obj:
                incumbent, incumbent_obj = fast, node_obj
            continue

        frac_dist = [(abs(x[j] - round(x[j])), j) for j in fractional]
        best_dist = max(d for d, _ in frac_dist)
        branch_col = min(j for d, j in frac_dist if d >= best_dist - 1e-12)
        for child_fix in ({**fix_ub, branch_col: 0.0}, None):
            counter += 1
            if child_fix is not None:
                heapq.heappush(heap, (node_obj, counter, dict(fix_lb), child_fix))
            else:
                heapq.heappush(heap, (node_obj, counter, {**fix_lb, branch_col: 1.0}, dict(fix_ub)))

    if incumbent is None:
        if limit_hit:
            return MilpSolution(Status.LIMIT_REACHED, None, None, total_iters, node_count, None)
        return MilpSolution(Status.INFEASIBLE, None, None, total_iters, node_count, None)

    if limit_hit:
        open_bounds = [b for b, _, _, _ in heap if b > -math.inf]
        lb_all = min([lower_bound] + open_bounds) if (open_bounds or lower_bound < math.inf) else -math.inf
        gap = max(0.0, incumbent_obj - lb_all)
        return MilpSolution(Status.LIMIT_REACHED, tuple(incumbent), incumbent_obj, total_iters, node_count, gap)
    return MilpSolution(Status.OPTIMAL, tuple(incumbent), incumbent_obj, total_iters, node_count, 0.0)


def load_solution_file(path) -> dict[str, float]:
    """Read `name value` pairs produced by an external solver."""
    out: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected 'name value', got {line!r}")
            out[parts[0]] = float(parts[1])
    return out


def solution_vector(problem: MilpProblem, values: dict[str, float]) -> tuple[float, ...]:
    """Dense column vector from a name->value mapping; absent names default to 0."""
    name_to_col = {name: j for j, name in enumerate(problem.index.names)}
    x = np.zeros(problem.num_cols)
    for name, value in values.items():
        if name not in name_to_col:
            raise KeyError(f"unknown column name {name!r}")
        x[name_to_col[name]] = value
    return tuple(x)
