"""Economic-dispatch LP for a fixed investment plan and uncertainty realisation.

The LP is first assembled as a :class:`DispatchTemplate`: a list of columns
(nonnegative or free, with a cost) and of rows in ``>=``/``==`` form whose
right-hand side is ``const + sum(coef * parameter)``. Parameters are the
quantities the outer problems vary:

* ``("z", line, w, d)``     effective de-energisation flag of a line on a day
* ``("alpha", r, w, d, t)`` availability factor of a renewable unit
* ``("cap", s)``            energy capacity of a candidate storage unit

The constraint matrix and costs never depend on parameters, which is what
lets the adversary dualise the template mechanically and the master problem
embed it with capacities and undergrounding as decision variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    AdversaryRealization,
    DispatchSolution,
    InvestmentPlan,
    NetworkModel,
    TimeGrid,
)
from .milp import LinExpr, Model, PersistentSolver, Sense, SolverParams, Var, solve
from .milp.backends import SolveResult

GE = Sense.GE
EQ = Sense.EQ


class InfeasibleDispatch(RuntimeError):
    """The dispatch LP has no feasible point (e.g. SoC boundary above capacity)."""


@dataclass(frozen=True)
class DispatchConfig:
    # Maximum angle spread used to size the per-line big-M of the angle rows.
    # ``None`` picks max(2*pi, 2 * sum(flow_limit / |B|)), which no feasible
    # angle difference can exceed.
    theta_span: float | None = None


@dataclass(frozen=True)
class Column:
    key: tuple
    nonneg: bool
    cost: float


@dataclass(frozen=True)
class TemplateRow:
    key: tuple
    cols: tuple[int, ...]
    coefs: tuple[float, ...]
    sense: Sense
    const: float
    params: tuple[tuple[int, float], ...] = ()


@dataclass
class DispatchTemplate:
    model: NetworkModel
    grid: TimeGrid
    columns: list[Column] = field(default_factory=list)
    rows: list[TemplateRow] = field(default_factory=list)
    params: list[tuple] = field(default_factory=list)
    param_pos: dict[tuple, int] = field(default_factory=dict)
    # family -> entity id -> array of indices in period order
    col_groups: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    row_groups: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    big_m: dict[str, float] = field(default_factory=dict)

    # -- construction helpers -------------------------------------------
    def _col(self, family: str, entity: str, k: int, nonneg: bool, cost: float) -> int:
        idx = len(self.columns)
        self.columns.append(Column((family, entity, k), nonneg, float(cost)))
        self.col_groups.setdefault(family, {}).setdefault(entity, []).append(idx)
        return idx

    def _param(self, key: tuple) -> int:
        pos = self.param_pos.get(key)
        if pos is None:
            pos = len(self.params)
            self.params.append(key)
            self.param_pos[key] = pos
        return pos

    def _row(self, family: str, entity: str, k: int, terms: dict[int, float], sense: Sense,
             const: float, params: Sequence[tuple[tuple, float]] = ()) -> int:
        idx = len(self.rows)
        items = sorted((j, a) for j, a in terms.items() if a != 0.0)
        ps = tuple((self._param(key), float(c)) for key, c in params if c != 0.0)
        self.rows.append(TemplateRow((family, entity, k), tuple(j for j, _ in items),
                                     tuple(a for _, a in items), sense, float(const), ps))
        self.row_groups.setdefault(family, {}).setdefault(entity, []).append(idx)
        return idx

    def _freeze(self) -> None:
        for groups in (self.col_groups, self.row_groups):
            for fam in groups:
                groups[fam] = {k: np.asarray(v, dtype=np.int64) for k, v in groups[fam].items()}

    # -- evaluation -------------------------------------------------------
    def rhs(self, values: np.ndarray) -> np.ndarray:
        """Numeric right-hand sides for parameter ``values``."""
        out = np.array([r.const for r in self.rows])
        for i, r in enumerate(self.rows):
            for p, c in r.params:
                out[i] += c * values[p]
        return out

    @property
    def cost(self) -> np.ndarray:
        return np.array([c.cost for c in self.columns])

    @property
    def parametric_rows(self) -> list[int]:
        return [i for i, r in enumerate(self.rows) if r.params]


def _theta_span(model: NetworkModel, config: DispatchConfig) -> float:
    if config.theta_span is not None:
        return float(config.theta_span)
    path = sum(ln.flow_limit / abs(ln.susceptance) for ln in model.lines)
    return max(2.0 * math.pi, 2.0 * path)


def build_template(model: NetworkModel, grid: TimeGrid, config: DispatchConfig | None = None) -> DispatchTemplate:
    config = config or DispatchConfig()
    tpl = DispatchTemplate(model, grid)
    span = _theta_span(model, config)
    tpl.big_m = {ln.id: abs(ln.susceptance) * span for ln in model.lines}
    K = grid.num_periods
    wk = grid.period_weights()
    ref_bus = model.buses[0].id

    # columns, period-major so each period's block is contiguous
    pg, pr, f, th, ch, dis, e, shed = ({} for _ in range(8))
    for k, w, d, t in grid.periods():
        for g in model.thermals:
            pg[g.id, k] = tpl._col("p_thermal", g.id, k, True, wk[k] * g.cost)
        for r in model.renewables:
            pr[r.id, k] = tpl._col("p_renewable", r.id, k, True, 0.0)
        for ln in model.lines:
            f[ln.id, k] = tpl._col("flow", ln.id, k, False, 0.0)
        for b in model.buses:
            if b.id != ref_bus:
                th[b.id, k] = tpl._col("angle", b.id, k, False, 0.0)
        for s in model.storages:
            ch[s.id, k] = tpl._col("charge", s.id, k, True, 0.0)
            dis[s.id, k] = tpl._col("discharge", s.id, k, True, wk[k] * s.discharge_cost)
            e[s.id, k] = tpl._col("soc", s.id, k, True, 0.0)
        for b in model.buses:
            shed[b.id, k] = tpl._col("shed", b.id, k, True, wk[k] * b.shed_cost)

    for k, w, d, t in grid.periods():
        for g in model.thermals:
            if g.p_min > 0:
                tpl._row("gen_min", g.id, k, {pg[g.id, k]: 1.0}, GE, g.p_min)
            tpl._row("gen_max", g.id, k, {pg[g.id, k]: -1.0}, GE, -g.p_max)
        for r in model.renewables:
            tpl._row("ren_max", r.id, k, {pr[r.id, k]: -1.0}, GE, 0.0,
                     [(("alpha", r.id, w, d, t), -r.p_max)])
        for b in model.buses:
            terms: dict[int, float] = {}

            def add(j, a):
                terms[j] = terms.get(j, 0.0) + a

            for g in model.thermals:
                if g.bus == b.id:
                    add(pg[g.id, k], 1.0)
            for r in model.renewables:
                if r.bus == b.id:
                    add(pr[r.id, k], 1.0)
            for s in model.storages:
                if s.bus == b.id:
                    add(dis[s.id, k], 1.0)
                    add(ch[s.id, k], -1.0)
            for ln in model.lines:
                if ln.to_bus == b.id:
                    add(f[ln.id, k], 1.0)
                if ln.from_bus == b.id:
                    add(f[ln.id, k], -1.0)
            add(shed[b.id, k], 1.0)
            load = float(b.load[w, d, t])
            tpl._row("balance", b.id, k, terms, EQ, load)
            tpl._row("shed_max", b.id, k, {shed[b.id, k]: -1.0}, GE, -load)
        for ln in model.lines:
            zkey = ("z", ln.id, w, d)
            tpl._row("line_up", ln.id, k, {f[ln.id, k]: -1.0}, GE, -ln.flow_limit, [(zkey, ln.flow_limit)])
            tpl._row("line_dn", ln.id, k, {f[ln.id, k]: 1.0}, GE, -ln.flow_limit, [(zkey, ln.flow_limit)])
            # flow - B*(theta_from - theta_to) within +-M*z
            ang: dict[int, float] = {f[ln.id, k]: 1.0}
            if ln.from_bus != ref_bus:
                ang[th[ln.from_bus, k]] = ang.get(th[ln.from_bus, k], 0.0) - ln.susceptance
            if ln.to_bus != ref_bus:
                ang[th[ln.to_bus, k]] = ang.get(th[ln.to_bus, k], 0.0) + ln.susceptance
            big = tpl.big_m[ln.id]
            tpl._row("angle_up", ln.id, k, {j: -a for j, a in ang.items()}, GE, 0.0, [(zkey, -big)])
            tpl._row("angle_dn", ln.id, k, ang, GE, 0.0, [(zkey, -big)])
        for s in model.storages:
            if s.is_candidate:
                tpl._row("soc_max", s.id, k, {e[s.id, k]: -1.0}, GE, 0.0, [(("cap", s.id), -1.0)])
            else:
                tpl._row("soc_max", s.id, k, {e[s.id, k]: -1.0}, GE, -s.existing_capacity)
            dyn = {e[s.id, k]: 1.0, ch[s.id, k]: -s.efficiency, dis[s.id, k]: 1.0 / s.efficiency}
            if k > 0:
                dyn[e[s.id, k - 1]] = -1.0
            tpl._row("soc_dyn", s.id, k, dyn, EQ, s.e_init if k == 0 else 0.0)
            if k == 0:
                # the level at the first period itself is E_init, so that period
                # exchanges no net energy with the grid
                tpl._row("soc_init", s.id, k, {e[s.id, k]: 1.0}, EQ, s.e_init)
            tpl._row("dis_max", s.id, k, {dis[s.id, k]: -1.0}, GE, -s.power_limit)
            tpl._row("ch_max", s.id, k, {ch[s.id, k]: -1.0}, GE, -s.power_limit)
    for s in model.storages:
        tpl._row("soc_end", s.id, K - 1, {e[s.id, K - 1]: 1.0}, EQ, s.e_end)

    # make sure every candidate capacity is a parameter even without rows
    for s in model.candidates:
        tpl._param(("cap", s.id))
    tpl._freeze()
    return tpl


def effective_outage(model: NetworkModel, grid: TimeGrid, plan: InvestmentPlan,
                     realization: AdversaryRealization) -> dict[str, np.ndarray]:
    """De-energised and not undergrounded, per line ``[w, d]``."""
    out = {}
    for ln in model.lines:
        z = np.asarray(realization.deenergize.get(ln.id, np.zeros(grid.day_shape, bool)), dtype=bool)
        out[ln.id] = z & (not plan.is_underground(ln.id))
    return out


def parameter_values(tpl: DispatchTemplate, plan: InvestmentPlan, realization: AdversaryRealization) -> np.ndarray:
    """Numeric value of every template parameter for a plan and realisation."""
    model, grid = tpl.model, tpl.grid
    zeff = effective_outage(model, grid, plan, realization)
    ren = {r.id: r for r in model.renewables}
    stor = {s.id: s for s in model.storages}
    vals = np.zeros(len(tpl.params))
    for p, key in enumerate(tpl.params):
        kind = key[0]
        if kind == "z":
            vals[p] = float(zeff[key[1]][key[2], key[3]])
        elif kind == "alpha":
            arr = realization.alpha.get(key[1])
            src = arr if arr is not None else ren[key[1]].alpha_avg
            vals[p] = float(src[key[2], key[3], key[4]])
        elif kind == "cap":
            vals[p] = plan.capacity(stor[key[1]])
    return vals


@dataclass
class Instance:
    """Template columns/rows placed into a :class:`Model`."""

    cols: list[Var]
    rows: list[int]
    cost: LinExpr


def instantiate(tpl: DispatchTemplate, m: Model, values: Sequence, prefix: str = "") -> Instance:
    """Add the template to ``m`` with parameter ``values``.

    ``values`` may mix floats with :class:`Var`/:class:`LinExpr`; symbolic
    parameters are moved to the left-hand side of their rows.
    """
    cols = []
    for c in tpl.columns:
        fam, ent, k = c.key
        cols.append(m.add_var(f"{prefix}{fam}[{ent},{k}]", 0.0 if c.nonneg else -math.inf, math.inf))
    base = cols[0].index if cols else 0
    symbolic = [not isinstance(v, (int, float, np.floating, np.integer)) for v in values]
    row_ids = []
    for r in tpl.rows:
        rhs = r.const
        index = [base + j for j in r.cols]
        value = list(r.coefs)
        extra: dict[int, float] = {}
        for p, c in r.params:
            v = values[p]
            if symbolic[p]:
                expr = v if isinstance(v, LinExpr) else v.to_expr()
                rhs += c * expr.const
                for j, a in expr.terms.items():
                    extra[j] = extra.get(j, 0.0) - c * a
            else:
                rhs += c * float(v)
        if extra:
            merged = dict(zip(index, value))
            for j, a in extra.items():
                merged[j] = merged.get(j, 0.0) + a
            index, value = list(merged), list(merged.values())
        fam, ent, k = r.key
        row_ids.append(m.add_row(index, value, r.sense, rhs, f"{prefix}{fam}[{ent},{k}]"))
    cost = LinExpr({base + j: c.cost for j, c in enumerate(tpl.columns) if c.cost}, 0.0, m)
    return Instance(cols, row_ids, cost)


@dataclass(frozen=True)
class DispatchProblem:
    model: NetworkModel
    grid: TimeGrid
    plan: InvestmentPlan
    realization: AdversaryRealization

    @property
    def effective_outage(self) -> dict[str, np.ndarray]:
        return effective_outage(self.model, self.grid, self.plan, self.realization)


@dataclass
class BuiltDispatch:
    model: Model
    template: DispatchTemplate
    instance: Instance
    values: np.ndarray


def _check_capacity(problem: DispatchProblem) -> None:
    for s in problem.model.storages:
        cap = problem.plan.capacity(s)
        if s.e_init > cap + 1e-9 or s.e_end > cap + 1e-9:
            raise InfeasibleDispatch(
                f"storage {s.id}: boundary energy (init {s.e_init}, end {s.e_end}) exceeds capacity {cap}")


def build_dispatch(problem: DispatchProblem, config: DispatchConfig | None = None,
                   template: DispatchTemplate | None = None) -> BuiltDispatch:
    _check_capacity(problem)
    tpl = template or build_template(problem.model, problem.grid, config)
    values = parameter_values(tpl, problem.plan, problem.realization)
    m = Model("dispatch")
    inst = instantiate(tpl, m, values)
    m.minimize(inst.cost)
    return BuiltDispatch(m, tpl, inst, values)


def extract_solution(tpl: DispatchTemplate, x: np.ndarray, objective: float) -> DispatchSolution:
    shape = tpl.grid.shape

    def family(name: str, entities) -> dict[str, np.ndarray]:
        groups = tpl.col_groups.get(name, {})
        return {e: x[groups[e]].reshape(shape) for e in entities if e in groups}

    model = tpl.model
    angle = family("angle", model.bus_ids)
    angle[model.buses[0].id] = np.zeros(shape)
    return DispatchSolution(
        p_thermal=family("p_thermal", [g.id for g in model.thermals]),
        p_renewable=family("p_renewable", [r.id for r in model.renewables]),
        flow=family("flow", [ln.id for ln in model.lines]),
        angle={b: angle[b] for b in model.bus_ids},
        soc=family("soc", [s.id for s in model.storages]),
        charge=family("charge", [s.id for s in model.storages]),
        discharge=family("discharge", [s.id for s in model.storages]),
        shed=family("shed", model.bus_ids),
        objective=float(objective),
    )


def solve_dispatch(problem: DispatchProblem, params: SolverParams | None = None, backend: str | None = None,
                   config: DispatchConfig | None = None, template: DispatchTemplate | None = None
                   ) -> DispatchSolution:
    built = build_dispatch(problem, config, template)
    res = solve(built.model, params, backend)
    _raise_unless_optimal(res)
    start = built.instance.cols[0].index if built.instance.cols else 0
    x = res.x[start:start + len(built.template.columns)]
    return extract_solution(built.template, x, res.objective)


def _raise_unless_optimal(res: SolveResult) -> None:
    if not res.optimal:
        raise InfeasibleDispatch(f"dispatch LP not solved to optimality: {res.status.value}")


def operating_cost(model: NetworkModel, grid: TimeGrid, sol: DispatchSolution) -> float:
    """Recompute the dispatch objective from primal values."""
    wk = np.asarray(grid.week_weight)

    def weighted(arr) -> float:
        return float((np.asarray(arr).sum(axis=(1, 2)) * wk).sum())

    total = 0.0
    for g in model.thermals:
        total += g.cost * weighted(sol.p_thermal[g.id])
    for s in model.storages:
        total += s.discharge_cost * weighted(sol.discharge[s.id])
    for b in model.buses:
        total += b.shed_cost * weighted(sol.shed[b.id])
    return total


def primal_violation(problem: DispatchProblem, sol: DispatchSolution) -> float:
    """Largest violation of the dispatch constraints by ``sol``."""
    tpl = build_template(problem.model, problem.grid)
    x = np.zeros(len(tpl.columns))
    sources = {
        "p_thermal": sol.p_thermal, "p_renewable": sol.p_renewable, "flow": sol.flow,
        "angle": sol.angle, "charge": sol.charge, "discharge": sol.discharge, "soc": sol.soc,
        "shed": sol.shed,
    }
    for fam, groups in tpl.col_groups.items():
        for ent, idx in groups.items():
            x[idx] = np.asarray(sources[fam][ent]).reshape(-1)
    rhs = tpl.rhs(parameter_values(tpl, problem.plan, problem.realization))
    worst = 0.0
    for r, b in zip(tpl.rows, rhs):
        lhs = sum(a * x[j] for j, a in zip(r.cols, r.coefs))
        worst = max(worst, abs(lhs - b) if r.sense is EQ else max(0.0, b - lhs))
    for c, v in zip(tpl.columns, x):
        if c.nonneg:
            worst = max(worst, -v)
    return worst


def solve_many(tpl: DispatchTemplate, value_sets, params: SolverParams | None = None,
               backend: str | None = None):
    """Yield the optimal dispatch objective for each parameter vector.

    Loads the LP once and only edits right-hand sides between solves.
    """
    m = Model("dispatch")
    inst = instantiate(tpl, m, np.zeros(len(tpl.params)))
    m.minimize(inst.cost)
    solver = PersistentSolver(m, params, backend)
    prow = tpl.parametric_rows
    rows = [inst.rows[i] for i in prow]
    for values in value_sets:
        full = tpl.rhs(values)
        solver.set_rhs(rows, full[prow])
        res = solver.solve()
        _raise_unless_optimal(res)
        yield res.objective
