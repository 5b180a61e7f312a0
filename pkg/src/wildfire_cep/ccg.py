"""Column-and-constraint generation for the two-stage robust planning problem.

The master chooses storage capacities and undergrounding and carries one
copy of the dispatch LP per adversary realisation found so far; its value
is a lower bound. The adversary evaluated at the master's plan gives an
upper bound. Iterate until the relative gap closes.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .adversary import UncertaintyBudgets, WorstCase, solve_subproblem
from .core import (
    AdversaryRealization,
    Annualization,
    InvestmentPlan,
    NetworkModel,
    TimeGrid,
    total_investment_cost,
)
from .dispatch import DispatchTemplate, build_template, instantiate
from .milp import LinExpr, Model, SolverParams, Var, solve


class Scheme(str, Enum):
    STORAGE_ONLY = "storage_only"
    STORAGE_AND_UNDERGROUND = "storage_and_underground"


@dataclass(frozen=True)
class CcgConfig:
    gap_tol: float = 1e-4
    max_iterations: int = 20
    scheme: Scheme = Scheme.STORAGE_AND_UNDERGROUND
    annualization: Annualization = field(default_factory=Annualization)

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.gap_tol > 0:
            raise ValueError("gap_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class MasterState:
    scenarios: list[AdversaryRealization] = field(default_factory=list)
    lower_bound: float = -math.inf
    upper_bound: float = math.inf
    incumbent: InvestmentPlan | None = None
    iteration: int = 0
    cut_log: list[dict] = field(default_factory=list)
    converged: bool = False
    status: str = "running"
    worst_case: WorstCase | None = None  # adversary response to the incumbent

    @property
    def gap(self) -> float:
        if not math.isfinite(self.upper_bound) or not math.isfinite(self.lower_bound):
            return math.inf
        return (self.upper_bound - self.lower_bound) / max(1.0, abs(self.upper_bound))

    def to_dict(self) -> dict:
        return {
            "scenarios": [s.to_dict() for s in self.scenarios],
            "lower_bound": _num(self.lower_bound),
            "upper_bound": _num(self.upper_bound),
            "incumbent": self.incumbent.to_dict() if self.incumbent else None,
            "iteration": self.iteration,
            "cut_log": self.cut_log,
            "converged": self.converged,
            "status": self.status,
            "worst_case": self.worst_case.to_dict() if self.worst_case else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MasterState":
        wc = data.get("worst_case")
        return cls(
            scenarios=[AdversaryRealization.from_dict(s) for s in data["scenarios"]],
            lower_bound=float(data["lower_bound"]),
            upper_bound=float(data["upper_bound"]),
            incumbent=InvestmentPlan.from_dict(data["incumbent"]) if data.get("incumbent") else None,
            iteration=int(data["iteration"]),
            cut_log=list(data.get("cut_log", [])),
            converged=bool(data.get("converged", False)),
            status=str(data.get("status", "running")),
            worst_case=WorstCase(AdversaryRealization.from_dict(wc["realization"]), float(wc["objective"]),
                                 None, wc.get("bound"), bool(wc.get("optimal", True))) if wc else None,
        )


def _num(v: float):
    # JSON has no infinities; keep them as strings that float() reads back
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


@dataclass
class Master:
    model: Model
    capacity: dict[str, Var]
    underground: dict[str, Var]
    delta: Var
    investment: LinExpr


def build_master(state: MasterState, model: NetworkModel, grid: TimeGrid, config: CcgConfig,
                 template: DispatchTemplate | None = None) -> Master:
    tpl = template or build_template(model, grid)
    ann = config.annualization
    m = Model("master")
    cap = {}
    for s in model.candidates:
        # boundary energies must fit in the battery for the dispatch to be feasible
        cap[s.id] = m.add_var(f"X[{s.id}]", min(max(s.e_init, s.e_end), s.x_sup), s.x_sup)
    ug = {}
    for ln in model.lines:
        v = m.add_binary(f"zUG[{ln.id}]")
        if config.scheme is Scheme.STORAGE_ONLY or not ln.at_risk:
            m.fix(v, 0.0)
        ug[ln.id] = v
    delta = m.add_var("delta", 0.0)
    inv = LinExpr(model=m)
    for ln in model.lines:
        inv._iadd(ug[ln.id], ann.underground * ln.underground_cost)
    for s in model.candidates:
        inv._iadd(cap[s.id], ann.storage * s.capacity_cost)

    for n, xi in enumerate(state.scenarios):
        values: list = []
        for key in tpl.params:
            kind = key[0]
            if kind == "z":
                out = xi.is_out(key[1], key[2], key[3])
                values.append(1.0 - ug[key[1]] if out else 0.0)
            elif kind == "alpha":
                arr = xi.alpha.get(key[1])
                if arr is None:
                    arr = next(r for r in model.renewables if r.id == key[1]).alpha_avg
                values.append(float(arr[key[2], key[3], key[4]]))
            else:
                values.append(cap[key[1]])
        inst = instantiate(tpl, m, values, prefix=f"s{n}_")
        m.add_constr(delta - inst.cost >= 0.0, f"recourse[{n}]")
    m.minimize(inv + delta)
    return Master(m, cap, ug, delta, inv)


def plan_from_master(master: Master, x: np.ndarray, model: NetworkModel) -> InvestmentPlan:
    caps = {}
    for s in model.candidates:
        v = master.capacity[s.id]
        caps[s.id] = float(min(max(x[v.index], v.lb), v.ub)) + 0.0  # + 0.0 folds -0.0
    return InvestmentPlan(caps, {lid: bool(x[v.index] > 0.5) for lid, v in master.underground.items()})


class CutLog:
    """Append-only JSON-lines writer, one record per iteration."""

    def __init__(self, path: str | os.PathLike | None):
        self.path = Path(path) if path else None

    def append(self, record: dict) -> None:
        if self.path is None:
            return
        with open(self.path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            fh.flush()


def save_checkpoint(state: MasterState, path: str | os.PathLike) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(state.to_dict(), sort_keys=True))
    os.replace(tmp, path)


def load_checkpoint(path: str | os.PathLike) -> MasterState:
    return MasterState.from_dict(json.loads(Path(path).read_text()))


def ccg_solve(model: NetworkModel, grid: TimeGrid, budgets: UncertaintyBudgets, config: CcgConfig | None = None,
              params: SolverParams | None = None, backend: str | None = None,
              cut_log_path: str | os.PathLike | None = None, checkpoint_path: str | os.PathLike | None = None,
              resume: bool = False, logger=None) -> MasterState:
    config = config or CcgConfig()
    tpl = build_template(model, grid)
    if resume and checkpoint_path and Path(checkpoint_path).exists():
        state = load_checkpoint(checkpoint_path)
    else:
        state = MasterState()
    cuts = CutLog(cut_log_path)

    while not state.converged and state.iteration < config.max_iterations:
        started = time.perf_counter()
        master = build_master(state, model, grid, config, tpl)
        res = solve(master.model, params, backend)
        if not res.has_solution:
            state.status = f"master_{res.status.value}"
            break
        # the master only gains constraints, so its value cannot drop; guard solver noise
        state.lower_bound = max(state.lower_bound, res.objective)
        plan = plan_from_master(master, res.x, model)
        wc = solve_subproblem(plan, model, grid, budgets, params, backend, template=tpl)
        inv = total_investment_cost(plan, model, config.annualization)
        candidate = inv + wc.objective
        if candidate < state.upper_bound:
            state.upper_bound, state.incumbent, state.worst_case = candidate, plan, wc
        state.iteration += 1
        repeated = any(wc.realization.encoding() == s.encoding() for s in state.scenarios)
        state.converged = state.gap <= config.gap_tol
        record = {
            "iteration": state.iteration,
            "master_objective": res.objective,
            "lower_bound": state.lower_bound,
            "upper_bound": state.upper_bound,
            "investment_cost": inv,
            "subproblem_objective": wc.objective,
            "subproblem_certified": wc.optimal,
            "plan": plan.to_dict(),
            "realization": wc.realization.to_dict(),
            "outages": wc.realization.outage_count(),
            "repeated_scenario": repeated,
            "gap": _num(state.gap),
            "wall_time": time.perf_counter() - started,
        }
        state.cut_log.append(record)
        cuts.append(record)
        if logger is not None:
            logger.info("ccg iteration %d: LB=%.6g UB=%.6g gap=%.3g", state.iteration, state.lower_bound,
                        state.upper_bound, state.gap)
        if state.converged:
            state.status = "converged"
        elif repeated:
            # the master already holds this scenario, so another round would return the same plan
            state.status = "stalled"
            break
        else:
            state.scenarios.append(wc.realization)
        if checkpoint_path:
            save_checkpoint(state, checkpoint_path)
    if not state.converged and state.status == "running":
        state.status = "iteration_limit"
    if checkpoint_path:
        save_checkpoint(state, checkpoint_path)
    return state
