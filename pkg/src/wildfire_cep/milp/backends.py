"""Solver backends behind a single ``solve`` entry point.

Two backends are provided: ``highs`` talks to HiGHS through ``highspy``
and supports warm-started re-solves; ``scipy`` goes through
``scipy.optimize.linprog``/``milp`` (also HiGHS underneath, but a different
call path, which makes it handy for cross-checking).

Dual values follow one convention regardless of backend or sense: each row
dual is ``d objective / d rhs``. For a minimisation ``>=`` rows therefore
carry nonnegative duals and ``<=`` rows nonpositive ones.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .model import LinExpr, Model, Var

BACKEND_ENV = "WILDFIRE_CEP_BACKEND"
DEFAULT_BACKEND = "highs"


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"
    ERROR = "error"


class BackendUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverParams:
    feasibility_tol: float = 1e-9
    optimality_tol: float = 1e-9
    mip_rel_gap: float = 1e-9
    mip_feasibility_tol: float = 1e-7
    time_limit: float = math.inf
    threads: int = 1


@dataclass(frozen=True)
class SolveResult:
    status: Status
    objective: float
    x: np.ndarray
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    wall_time: float = 0.0
    mip_gap: float = 0.0
    has_solution: bool = False
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def value(self, item) -> float:
        if isinstance(item, Var):
            return float(self.x[item.index])
        if isinstance(item, LinExpr):
            return float(item.value(self.x))
        return float(item)

    def dual(self, row: int) -> float:
        if self.duals is None:
            raise ValueError("no dual values (MIP or non-optimal solve)")
        return float(self.duals[row])


def resolve_backend_key(key: str | None) -> str:
    key = key or os.environ.get(BACKEND_ENV) or DEFAULT_BACKEND
    key = key.lower()
    if key not in _BACKENDS:
        raise BackendUnavailable(f"unknown backend {key!r}; choose from {sorted(_BACKENDS)}")
    return key


def solve(model: Model, params: SolverParams | None = None, backend: str | None = None) -> SolveResult:
    model.check()
    return _BACKENDS[resolve_backend_key(backend)](model, params or SolverParams())


# ---------------------------------------------------------------------------
# highspy
# ---------------------------------------------------------------------------

def _import_highspy():
    try:
        import highspy
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise BackendUnavailable("highspy is not installed") from exc
    return highspy


def _highs_lp(highspy, arr: dict, maximize: bool):
    lp = highspy.HighsLp()
    n = len(arr["cost"])
    m = len(arr["row_lower"])
    lp.num_col_ = n
    lp.num_row_ = m
    lp.col_cost_ = arr["cost"]
    lp.col_lower_ = arr["col_lower"]
    lp.col_upper_ = arr["col_upper"]
    lp.row_lower_ = arr["row_lower"]
    lp.row_upper_ = arr["row_upper"]
    lp.offset_ = float(arr["offset"])
    lp.a_matrix_.format_ = highspy.MatrixFormat.kRowwise
    lp.a_matrix_.start_ = arr["start"]
    lp.a_matrix_.index_ = arr["index"]
    lp.a_matrix_.value_ = arr["value"]
    lp.a_matrix_.num_col_ = n
    lp.a_matrix_.num_row_ = m
    lp.sense_ = highspy.ObjSense.kMaximize if maximize else highspy.ObjSense.kMinimize
    if arr["integrality"].any():
        lp.integrality_ = [
            highspy.HighsVarType.kInteger if i else highspy.HighsVarType.kContinuous
            for i in arr["integrality"]
        ]
    return lp


def _configure(h, params: SolverParams) -> None:
    h.setOptionValue("output_flag", False)
    h.setOptionValue("primal_feasibility_tolerance", params.feasibility_tol)
    h.setOptionValue("dual_feasibility_tolerance", params.optimality_tol)
    h.setOptionValue("mip_rel_gap", params.mip_rel_gap)
    h.setOptionValue("mip_feasibility_tolerance", params.mip_feasibility_tol)
    h.setOptionValue("threads", params.threads)
    h.setOptionValue("random_seed", 0)
    if math.isfinite(params.time_limit):
        h.setOptionValue("time_limit", float(params.time_limit))


def _highs_result(highspy, h, is_mip: bool, maximize: bool, n: int, started: float) -> SolveResult:
    status = h.getModelStatus()
    S = highspy.HighsModelStatus
    info = h.getInfo()
    mapping = {
        S.kOptimal: Status.OPTIMAL,
        S.kInfeasible: Status.INFEASIBLE,
        S.kUnbounded: Status.UNBOUNDED,
        S.kUnboundedOrInfeasible: Status.INFEASIBLE,
        S.kTimeLimit: Status.LIMIT,
        S.kIterationLimit: Status.LIMIT,
        S.kSolutionLimit: Status.LIMIT,
        S.kInterrupt: Status.LIMIT,
    }
    st = mapping.get(status, Status.ERROR)
    has_solution = info.primal_solution_status == 2  # kSolutionStatusFeasible
    sol = h.getSolution()
    x = np.array(sol.col_value, dtype=float) if has_solution else np.full(n, np.nan)
    duals = reduced = None
    if st is Status.OPTIMAL and not is_mip:
        duals = np.array(sol.row_dual, dtype=float)
        reduced = np.array(sol.col_dual, dtype=float)
    obj = float(info.objective_function_value) if has_solution else math.nan
    iters = int(info.simplex_iteration_count) if not is_mip else int(info.mip_node_count)
    gap = float(info.mip_gap) if is_mip and has_solution else 0.0
    return SolveResult(
        status=st,
        objective=obj,
        x=x,
        duals=duals,
        reduced_costs=reduced,
        iterations=max(iters, 0),
        wall_time=time.perf_counter() - started,
        mip_gap=gap,
        has_solution=has_solution,
        info={"backend": "highs", "model_status": h.modelStatusToString(status)},
    )


def _solve_highs(model: Model, params: SolverParams) -> SolveResult:
    highspy = _import_highspy()
    started = time.perf_counter()
    arr = model.arrays()
    if model.num_vars == 0:
        return _empty_result(arr, "highs", started)
    h = highspy.Highs()
    _configure(h, params)
    maximize = model.objective.maximize
    h.passModel(_highs_lp(highspy, arr, maximize))
    h.run()
    if model.is_mip and h.getModelStatus() == highspy.HighsModelStatus.kSolveError:
        # HiGHS rejects an incumbent that misses its own feasibility check by a
        # hair; one retry at the solver's default tolerance usually recovers it
        h.setOptionValue("mip_feasibility_tolerance", max(params.mip_feasibility_tol, 1e-6))
        h.run()
    return _highs_result(highspy, h, model.is_mip, maximize, model.num_vars, started)


class PersistentSolver:
    """Keeps one loaded model and re-solves after row-bound edits.

    Used where the same LP is solved many times with different right-hand
    sides (the brute-force adversary enumerates thousands of those).
    """

    def __init__(self, model: Model, params: SolverParams | None = None, backend: str | None = None):
        model.check()
        self.model = model
        self.params = params or SolverParams()
        self.backend = resolve_backend_key(backend)
        self._arr = model.arrays()
        self._h = None
        if self.backend == "highs":
            highspy = _import_highspy()
            self._highspy = highspy
            self._h = highspy.Highs()
            _configure(self._h, self.params)
            self._h.passModel(_highs_lp(highspy, self._arr, model.objective.maximize))

    def set_row_bounds(self, rows: Sequence[int], lower: Sequence[float], upper: Sequence[float]) -> None:
        rows = np.asarray(rows, dtype=np.int32)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        self._arr["row_lower"][rows] = lower
        self._arr["row_upper"][rows] = upper
        if self._h is not None and len(rows):
            self._h.changeRowsBounds(len(rows), rows, lower, upper)

    def set_rhs(self, rows: Sequence[int], rhs: Sequence[float]) -> None:
        lo, hi = [], []
        for r, v in zip(rows, rhs):
            sense = self.model.rows[r].sense.value
            lo.append(-math.inf if sense == "<=" else v)
            hi.append(math.inf if sense == ">=" else v)
        self.set_row_bounds(rows, lo, hi)

    def solve(self) -> SolveResult:
        started = time.perf_counter()
        if self._h is None:
            return _solve_scipy_arrays(self._arr, self.model.objective.maximize, self.params)
        self._h.run()
        return _highs_result(self._highspy, self._h, self.model.is_mip,
                             self.model.objective.maximize, self.model.num_vars, started)


# ---------------------------------------------------------------------------
# scipy
# ---------------------------------------------------------------------------

def _empty_result(arr: dict, backend: str, started: float) -> SolveResult:
    m = len(arr["row_lower"])
    feasible = bool(np.all(arr["row_lower"] <= 0.0) and np.all(arr["row_upper"] >= 0.0))
    return SolveResult(
        status=Status.OPTIMAL if feasible else Status.INFEASIBLE,
        objective=float(arr["offset"]) if feasible else math.nan,
        x=np.zeros(0),
        duals=np.zeros(m) if feasible else None,
        reduced_costs=np.zeros(0) if feasible else None,
        wall_time=time.perf_counter() - started,
        has_solution=feasible,
        info={"backend": backend},
    )


def _solve_scipy(model: Model, params: SolverParams) -> SolveResult:
    return _solve_scipy_arrays(model.arrays(), model.objective.maximize, params)


def _solve_scipy_arrays(arr: dict, maximize: bool, params: SolverParams) -> SolveResult:
    from scipy import sparse
    from scipy.optimize import Bounds, LinearConstraint, linprog, milp

    started = time.perf_counter()
    n = len(arr["cost"])
    m = len(arr["row_lower"])
    sign = -1.0 if maximize else 1.0
    c = sign * arr["cost"]
    A = sparse.csr_array((arr["value"], arr["index"], arr["start"]), shape=(m, n))
    is_mip = bool(arr["integrality"].any())
    limit = None if not math.isfinite(params.time_limit) else params.time_limit
    if n == 0:
        return _empty_result(arr, "scipy", started)
    if is_mip:
        options = {"disp": False, "mip_rel_gap": params.mip_rel_gap}
        if limit is not None:
            options["time_limit"] = limit
        cons = [LinearConstraint(A, arr["row_lower"], arr["row_upper"])] if m else []
        res = milp(c, constraints=cons, integrality=arr["integrality"],
                   bounds=Bounds(arr["col_lower"], arr["col_upper"]), options=options)
        status = {0: Status.OPTIMAL, 1: Status.LIMIT, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(
            res.status, Status.ERROR)
        has_solution = res.x is not None
        x = np.asarray(res.x, dtype=float) if has_solution else np.full(n, np.nan)
        obj = sign * float(res.fun) + float(arr["offset"]) if has_solution else math.nan
        return SolveResult(
            status=status, objective=obj, x=x, wall_time=time.perf_counter() - started,
            mip_gap=float(getattr(res, "mip_gap", 0.0) or 0.0), has_solution=has_solution,
            iterations=int(getattr(res, "mip_node_count", 0) or 0),
            info={"backend": "scipy", "message": res.message},
        )
    # split two-sided rows into A_ub / A_eq blocks
    lo, hi = arr["row_lower"], arr["row_upper"]
    eq = np.isfinite(lo) & np.isfinite(hi) & (lo == hi)
    ge = np.isfinite(lo) & ~eq
    le = np.isfinite(hi) & ~eq
    A_ub = sparse.vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([hi[le], -lo[ge]]) if A_ub is not None else None
    options = {"primal_feasibility_tolerance": params.feasibility_tol,
               "dual_feasibility_tolerance": params.optimality_tol}
    if limit is not None:
        options["time_limit"] = limit
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub,
        A_eq=A[eq] if eq.any() else None, b_eq=lo[eq] if eq.any() else None,
        bounds=np.column_stack([arr["col_lower"], arr["col_upper"]]),
        method="highs", options=options,
    )
    status = {0: Status.OPTIMAL, 1: Status.LIMIT, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(
        res.status, Status.ERROR)
    has_solution = status is Status.OPTIMAL
    x = np.asarray(res.x, dtype=float) if has_solution else np.full(n, np.nan)
    duals = reduced = None
    if has_solution:
        duals = np.zeros(m)
        if A_ub is not None:
            mu = np.asarray(res.ineqlin.marginals)
            n_le = int(le.sum())
            duals[le] = mu[:n_le]
            duals[ge] = -mu[n_le:]
        if eq.any():
            duals[eq] = np.asarray(res.eqlin.marginals)
        duals *= sign
        reduced = sign * (np.asarray(res.lower.marginals) + np.asarray(res.upper.marginals))
    obj = sign * float(res.fun) + float(arr["offset"]) if has_solution else math.nan
    return SolveResult(
        status=status, objective=obj, x=x, duals=duals, reduced_costs=reduced,
        iterations=int(getattr(res, "nit", 0) or 0), wall_time=time.perf_counter() - started,
        has_solution=has_solution, info={"backend": "scipy", "message": res.message},
    )


_BACKENDS = {"highs": _solve_highs, "scipy": _solve_scipy}


def available_backends() -> list[str]:
    out = []
    for key in _BACKENDS:
        if key == "highs":
            try:
                _import_highspy()
            except BackendUnavailable:
                continue
        out.append(key)
    return out

