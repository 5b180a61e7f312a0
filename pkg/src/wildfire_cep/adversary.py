"""Worst-case realisation of line de-energisation and renewable availability.

For a fixed investment plan the adversary maximises the optimal dispatch
cost over the joint risk/availability uncertainty set. The inner LP is
replaced by its dual, obtained by transposing the dispatch template row by
row, so the certificate "dual value == primal value" holds by construction.
Products of dual variables with the binary uncertainty (outage flags and
availability bits) are linearised with big-M envelopes.

A brute-force enumerator over the same discrete set is provided for
verification on small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .core import AdversaryRealization, InvestmentPlan, NetworkModel, TimeGrid
from .dispatch import (
    DispatchConfig,
    DispatchProblem,
    DispatchTemplate,
    build_template,
    instantiate,
    parameter_values,
    solve_dispatch,
)
from .milp import LinExpr, Model, Sense, SolverParams, Status, Var, solve
from .milp.backends import PersistentSolver

GE, LE, EQ = Sense.GE, Sense.LE, Sense.EQ

ALPHA_SCALES = ("renewables", "weeks")


# -- binary expansion ---------------------------------------------------------

def bit_weights(n_bits: int) -> np.ndarray:
    """Weights ``2**(1-n)`` for ``n = 1..N``."""
    return 2.0 ** (1 - np.arange(1, n_bits + 1))


def decode_alpha(bits, alpha_avg: float, alpha_dev: float) -> float:
    """Availability represented by an MSB-first bit vector."""
    bits = np.asarray(bits, dtype=float).reshape(-1)
    if bits.size < 1:
        raise ValueError("at least one bit is required")
    lo, hi = alpha_avg - alpha_dev, alpha_avg + alpha_dev
    value = lo + alpha_dev * float(bits @ bit_weights(bits.size))
    return min(max(value, lo), hi)


def encode_alpha(alpha: float, alpha_avg: float, alpha_dev: float, n_bits: int) -> np.ndarray:
    """Bits of the encodable availability nearest to ``alpha``.

    With zero deviation every bit pattern decodes to the mean; the pattern
    with unit bit sum is returned so the budget deviation is zero.
    """
    bits = np.zeros(n_bits, dtype=np.int8)
    if alpha_dev <= 0:
        bits[0] = 1
        return bits
    steps = 2 ** (n_bits - 1)
    k = int(round((alpha - (alpha_avg - alpha_dev)) / alpha_dev * steps))
    k = min(max(k, 0), 2 ** n_bits - 1)
    for n in range(n_bits):
        bits[n] = (k >> (n_bits - 1 - n)) & 1
    return bits


def bit_deviation(bits) -> float:
    """``|1 - sum(bits * weights)|``: normalised distance from the mean."""
    bits = np.asarray(bits, dtype=float)
    return abs(1.0 - float(bits @ bit_weights(bits.size)))


# -- uncertainty description --------------------------------------------------

@dataclass(frozen=True)
class UncertaintyBudgets:
    gamma_r: float = 0.0
    gamma_alpha: float = 0.0
    n_bits: int = 8
    # per-(w, d) and per-(w, d, t) overrides of the uniform budgets
    gamma_r_overrides: Mapping[tuple[int, int], float] = field(default_factory=dict)
    gamma_alpha_overrides: Mapping[tuple[int, int, int], float] = field(default_factory=dict)
    # "renewables" scales the availability budget by sqrt(#units),
    # "weeks" by sqrt(#representative weeks)
    alpha_scale: str = "renewables"
    big_m_dual: float | None = None
    big_m_risk: float | None = None

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if self.alpha_scale not in ALPHA_SCALES:
            raise ValueError(f"alpha_scale must be one of {ALPHA_SCALES}")
        for name, v in [("gamma_r", self.gamma_r), ("gamma_alpha", self.gamma_alpha),
                        *[("gamma_r_overrides", x) for x in self.gamma_r_overrides.values()],
                        *[("gamma_alpha_overrides", x) for x in self.gamma_alpha_overrides.values()]]:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def risk_budget(self, model: NetworkModel, w: int, d: int) -> float:
        g = self.gamma_r_overrides.get((w, d), self.gamma_r)
        return g * math.sqrt(len(model.lines))

    def alpha_budget(self, model: NetworkModel, grid: TimeGrid, w: int, d: int, t: int) -> float:
        g = self.gamma_alpha_overrides.get((w, d, t), self.gamma_alpha)
        count = len(model.renewables) if self.alpha_scale == "renewables" else grid.W
        return g * math.sqrt(count)

    def dual_big_m(self, model: NetworkModel) -> float:
        if self.big_m_dual is not None:
            return float(self.big_m_dual)
        total = sum(float(b.load.max(initial=0.0)) for b in model.buses)
        return max(model.max_shed_cost, 1.0) * (1.0 + total)

    def risk_big_m(self, model: NetworkModel) -> float:
        if self.big_m_risk is not None:
            return float(self.big_m_risk)
        risky = [ln for ln in model.lines if ln.at_risk]
        if not risky:
            return 1.0
        top = max(float(np.max(ln.risk_avg + ln.risk_dev)) for ln in risky)
        return top + max(ln.risk_threshold for ln in risky) + 1.0


def min_gamma(line, w: int, d: int) -> float:
    """Smallest risk deviation share that lets ``line`` reach its threshold."""
    if not line.at_risk:
        return math.inf
    avg, dev = float(line.risk_avg[w, d]), float(line.risk_dev[w, d])
    gap = line.risk_threshold - avg
    if gap <= 0:
        return 0.0
    if dev <= 0:
        return math.inf
    g = gap / dev
    return g if g <= 1.0 else math.inf


def can_deenergize(line, plan: InvestmentPlan, w: int, d: int) -> bool:
    return not plan.is_underground(line.id) and min_gamma(line, w, d) <= 1.0


# -- results ------------------------------------------------------------------

@dataclass(frozen=True)
class DualSolution:
    """Dual values keyed like the dispatch template.

    ``rows[family][entity]`` holds one value per period for every row family
    (``balance`` prices, ``soc_dyn`` multipliers, bound duals ...).
    ``products`` holds the linearisation auxiliaries: ``line_up``/``line_dn``
    and ``angle_up``/``angle_dn`` (dual times outage flag) and ``alpha``
    (dual times availability bit, shape ``[periods, N]``).
    """

    rows: Mapping[str, Mapping[str, np.ndarray]]
    products: Mapping[str, Mapping[str, np.ndarray]] = field(default_factory=dict)


@dataclass(frozen=True)
class WorstCase:
    realization: AdversaryRealization
    objective: float  # primal dispatch cost at the realisation
    dual: DualSolution | None = None
    bound: float | None = None  # objective reported by the dual MILP
    optimal: bool = True
    evaluated: int = 0  # oracle: number of realisations solved

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "bound": self.bound,
            "optimal": self.optimal,
            "realization": self.realization.to_dict(),
        }


# -- dual subproblem ----------------------------------------------------------

@dataclass
class Subproblem:
    model: Model
    template: DispatchTemplate
    dual_vars: list[Var]
    z: dict[tuple[str, int, int], Var]
    bits: dict[tuple[str, int, int, int], list[Var]]
    products: dict[tuple[int, int], list[Var]]
    risk: dict[tuple[str, int, int], tuple[Var, Var, Var]]
    big_m: float


def _transpose(tpl: DispatchTemplate) -> list[list[tuple[int, float]]]:
    cols: list[list[tuple[int, float]]] = [[] for _ in tpl.columns]
    for i, r in enumerate(tpl.rows):
        for j, a in zip(r.cols, r.coefs):
            cols[j].append((i, a))
    return cols


def build_subproblem(plan: InvestmentPlan, model: NetworkModel, grid: TimeGrid, budgets: UncertaintyBudgets,
                     fixed: AdversaryRealization | None = None, template: DispatchTemplate | None = None,
                     dispatch_config: DispatchConfig | None = None) -> Subproblem:
    """Dual of the dispatch LP maximised jointly over the uncertainty set.

    With ``fixed`` the outage flags and availability bits are pinned to the
    given realisation (its ``alpha_bits`` are used when present, otherwise
    the availabilities are encoded) and the uncertainty-set constraints are
    left out, leaving the linearised dual LP of that one scenario.
    """
    tpl = template or build_template(model, grid, dispatch_config)
    big = budgets.dual_big_m(model)
    m_risk = budgets.risk_big_m(model)
    N = budgets.n_bits
    weights = bit_weights(N)
    m = Model("worst_case")

    # dual variables, one per template row
    y = []
    for r in tpl.rows:
        fam, ent, k = r.key
        lb = 0.0 if r.sense is GE else -math.inf
        y.append(m.add_var(f"y_{fam}[{ent},{k}]", lb, math.inf))

    # dual feasibility: A^T y <= c (nonneg columns) or == c (free columns)
    for j, (col, entries) in enumerate(zip(tpl.columns, _transpose(tpl))):
        fam, ent, k = col.key
        m.add_row([y[i].index for i, _ in entries], [a for _, a in entries],
                  LE if col.nonneg else EQ, col.cost, f"dual_{fam}[{ent},{k}]")

    # uncertainty variables
    ren = {r.id: r for r in model.renewables}
    z: dict[tuple[str, int, int], Var] = {}
    risk: dict[tuple[str, int, int], tuple[Var, Var, Var]] = {}
    for w in range(grid.W):
        for d in range(grid.D):
            gammas = []
            for ln in model.lines:
                if fixed is not None:
                    # pinned realisation: flags are constants, the set itself is irrelevant
                    z[ln.id, w, d] = m.add_binary(f"z[{ln.id},{w},{d}]")
                    continue
                if not ln.at_risk:
                    continue
                zv = m.add_binary(f"z[{ln.id},{w},{d}]")
                z[ln.id, w, d] = zv
                g = m.add_var(f"gamma[{ln.id},{w},{d}]", 0.0, 1.0)
                rp = m.add_var(f"risk[{ln.id},{w},{d}]", 0.0)
                rs = m.add_var(f"real_risk[{ln.id},{w},{d}]", 0.0)
                risk[ln.id, w, d] = (g, rp, rs)
                gammas.append(g)
                avg, dev, th = float(ln.risk_avg[w, d]), float(ln.risk_dev[w, d]), ln.risk_threshold
                m.add_constr(rp + dev * g >= avg, f"risk_lo[{ln.id},{w},{d}]")
                m.add_constr(rp - dev * g <= avg, f"risk_hi[{ln.id},{w},{d}]")
                m.add_constr(rs - m_risk * zv <= th, f"thr_up[{ln.id},{w},{d}]")
                m.add_constr(rs - m_risk * zv >= th - m_risk, f"thr_dn[{ln.id},{w},{d}]")
                m.add_constr(rs - rp <= 0.0, f"real_le_perceived[{ln.id},{w},{d}]")
                ug = 1.0 if plan.is_underground(ln.id) else 0.0
                m.add_constr(rs.to_expr() <= (1.0 - ug) * m_risk, f"real_ug[{ln.id},{w},{d}]")
                # an undergrounded line is never switched off, even at zero threshold
                m.add_constr(zv.to_expr() <= 1.0 - ug, f"z_ug[{ln.id},{w},{d}]")
            if gammas:
                m.add_constr(LinExpr.sum(gammas) <= budgets.risk_budget(model, w, d), f"risk_budget[{w},{d}]")

    bits: dict[tuple[str, int, int, int], list[Var]] = {}
    for k, w, d, t in grid.periods():
        devs = []
        for r in model.renewables:
            if r.alpha_dev[w, d, t] <= 0:
                continue
            u = [m.add_binary(f"u[{r.id},{w},{d},{t},{n + 1}]") for n in range(N)]
            bits[r.id, w, d, t] = u
            dv = m.add_var(f"alpha_dev[{r.id},{w},{d},{t}]", 0.0)
            if fixed is not None:
                continue
            s = LinExpr.sum(float(weights[n]) * u[n] for n in range(N))
            m.add_constr(dv + s >= 1.0)
            m.add_constr(dv - s >= -1.0)
            devs.append(dv)
        if devs:
            m.add_constr(LinExpr.sum(devs) <= budgets.alpha_budget(model, grid, w, d, t),
                         f"alpha_budget[{w},{d},{t}]")

    # objective: sum_i y_i * rhs_i(xi), products linearised
    obj = LinExpr(model=m)
    products: dict[tuple[int, int], list[Var]] = {}

    def product(i: int, b: Var, tag: str) -> Var:
        v = m.add_var(f"{tag}[{i}]", 0.0, big)
        m.add_constr(v - big * b <= 0.0)
        m.add_constr(v - y[i] <= 0.0)
        m.add_constr(v - y[i] - big * b >= -big)
        return v

    for i, r in enumerate(tpl.rows):
        coef_y = r.const
        for p, c in r.params:
            key = tpl.params[p]
            kind = key[0]
            if kind == "z":
                zv = z.get((key[1], key[2], key[3]))
                if zv is None:
                    continue
                v = product(i, zv, "yz")
                products[i, p] = [v]
                obj._iadd(v, c)
            elif kind == "alpha":
                rg = ren[key[1]]
                w, d, t = key[2], key[3], key[4]
                avg, dev = float(rg.alpha_avg[w, d, t]), float(rg.alpha_dev[w, d, t])
                u = bits.get((key[1], w, d, t))
                if u is None:
                    coef_y += c * avg
                    continue
                coef_y += c * (avg - dev)
                vs = [product(i, u[n], "yu") for n in range(N)]
                products[i, p] = vs
                for n in range(N):
                    obj._iadd(vs[n], c * dev * float(weights[n]))
            elif kind == "cap":
                coef_y += c * plan.capacity(model.storage(key[1]))
        if coef_y:
            obj._iadd(y[i], coef_y)
    m.maximize(obj)

    if fixed is not None:
        _pin(m, model, grid, budgets, fixed, plan, z, bits)

    return Subproblem(m, tpl, y, z, bits, products, risk, big)


def _pin(m: Model, model: NetworkModel, grid: TimeGrid, budgets: UncertaintyBudgets,
         fixed: AdversaryRealization, plan: InvestmentPlan, z, bits) -> None:
    for (lid, w, d), zv in z.items():
        # undergrounded lines stay energised whatever the realisation says
        m.fix(zv, 1.0 if fixed.is_out(lid, w, d) and not plan.is_underground(lid) else 0.0)
    for (rid, w, d, t), u in bits.items():
        if rid in fixed.alpha_bits:
            pattern = np.asarray(fixed.alpha_bits[rid])[w, d, t]
        else:
            rg = model.renewables[[r.id for r in model.renewables].index(rid)]
            pattern = encode_alpha(float(fixed.alpha[rid][w, d, t]), float(rg.alpha_avg[w, d, t]),
                                   float(rg.alpha_dev[w, d, t]), budgets.n_bits)
        for var, b in zip(u, pattern):
            m.fix(var, float(b))


def _realization(sub: Subproblem, x: np.ndarray, model: NetworkModel, grid: TimeGrid,
                 budgets: UncertaintyBudgets) -> AdversaryRealization:
    deen = {ln.id: np.zeros(grid.day_shape, dtype=bool) for ln in model.lines}
    gamma, perceived, real = {}, {}, {}
    for ln in model.lines:
        if ln.at_risk:
            gamma[ln.id] = np.zeros(grid.day_shape)
            perceived[ln.id] = np.zeros(grid.day_shape)
            real[ln.id] = np.zeros(grid.day_shape)
    for (lid, w, d), zv in sub.z.items():
        deen[lid][w, d] = x[zv.index] > 0.5
        if (lid, w, d) not in sub.risk:
            continue
        g, rp, rs = sub.risk[lid, w, d]
        gamma[lid][w, d] = x[g.index]
        perceived[lid][w, d] = x[rp.index]
        real[lid][w, d] = x[rs.index]
    alpha, abits = {}, {}
    for r in model.renewables:
        a = np.array(r.alpha_avg, dtype=float)
        bb = np.zeros(grid.shape + (budgets.n_bits,), dtype=np.int8)
        bb[..., 0] = 1
        for k, w, d, t in grid.periods():
            u = sub.bits.get((r.id, w, d, t))
            if u is None:
                continue
            pattern = np.array([1 if x[v.index] > 0.5 else 0 for v in u], dtype=np.int8)
            bb[w, d, t] = pattern
            a[w, d, t] = decode_alpha(pattern, float(r.alpha_avg[w, d, t]), float(r.alpha_dev[w, d, t]))
        alpha[r.id], abits[r.id] = a, bb
    return AdversaryRealization(deen, alpha, abits, gamma, perceived, real)


def _dual_solution(sub: Subproblem, x: np.ndarray) -> DualSolution:
    tpl = sub.template
    rows = {fam: {ent: x[[sub.dual_vars[i].index for i in idx]] for ent, idx in groups.items()}
            for fam, groups in tpl.row_groups.items()}
    prods: dict[str, dict[str, list]] = {}
    for (i, p), vs in sorted(sub.products.items()):
        fam, ent, _ = tpl.rows[i].key
        tag = "alpha" if len(vs) > 1 or tpl.params[p][0] == "alpha" else fam
        prods.setdefault(tag, {}).setdefault(ent, []).append([x[v.index] for v in vs] if tag == "alpha"
                                                             else x[vs[0].index])
    products = {tag: {ent: np.asarray(v) for ent, v in groups.items()} for tag, groups in prods.items()}
    return DualSolution(rows, products)


def solve_subproblem(plan: InvestmentPlan, model: NetworkModel, grid: TimeGrid, budgets: UncertaintyBudgets,
                     params: SolverParams | None = None, backend: str | None = None,
                     template: DispatchTemplate | None = None, certify_tol: float = 1e-5,
                     max_escalations: int = 3) -> WorstCase:
    """Worst-case realisation for ``plan``, certified by a primal re-solve.

    If the dual MILP value and the primal dispatch cost at its realisation
    disagree, the dual big-M is taken as too small, multiplied by 10 and the
    MILP re-solved (at most ``max_escalations`` times).
    """
    tpl = template or build_template(model, grid)
    current = budgets
    for attempt in range(max_escalations + 1):
        sub = build_subproblem(plan, model, grid, current, template=tpl)
        res = solve(sub.model, params, backend)
        if not res.has_solution:
            raise RuntimeError(f"worst-case MILP returned no solution: {res.status.value}")
        xi = _realization(sub, res.x, model, grid, current)
        primal = solve_dispatch(DispatchProblem(model, grid, plan, xi), params, backend, template=tpl).objective
        if abs(primal - res.objective) <= certify_tol * max(1.0, abs(primal)) or attempt == max_escalations:
            break
        current = _with_big_m(current, sub.big_m * 10.0)
    return WorstCase(xi, primal, _dual_solution(sub, res.x), res.objective,
                     optimal=res.optimal and abs(primal - res.objective) <= certify_tol * max(1.0, abs(primal)))


def _with_big_m(b: UncertaintyBudgets, big: float) -> UncertaintyBudgets:
    return replace(b, big_m_dual=big)


def dual_value(plan: InvestmentPlan, model: NetworkModel, grid: TimeGrid, realization: AdversaryRealization,
               budgets: UncertaintyBudgets | None = None, params: SolverParams | None = None,
               backend: str | None = None) -> float:
    """Optimal value of the linearised dual with the uncertainty pinned."""
    budgets = budgets or UncertaintyBudgets(gamma_r=1.0, gamma_alpha=1.0)
    sub = build_subproblem(plan, model, grid, budgets, fixed=realization)
    res = solve(sub.model, params, backend)
    if res.status is not Status.OPTIMAL:
        raise RuntimeError(f"pinned dual problem not optimal: {res.status.value}")
    return res.objective


# -- brute-force oracle -------------------------------------------------------

class EnumerationTooLarge(ValueError):
    pass


def _bit_patterns(n_bits: int) -> list[np.ndarray]:
    return [np.array(p, dtype=np.int8) for p in itertools.product((0, 1), repeat=n_bits)]


def _day_outage_options(model: NetworkModel, plan: InvestmentPlan, budgets: UncertaintyBudgets,
                        w: int, d: int) -> list[frozenset[str]]:
    cands = [(ln.id, min_gamma(ln, w, d)) for ln in model.lines if can_deenergize(ln, plan, w, d)]
    budget = budgets.risk_budget(model, w, d) + 1e-9
    out = []
    for n in range(len(cands) + 1):
        for combo in itertools.combinations(cands, n):
            if sum(g for _, g in combo) <= budget:
                out.append(frozenset(lid for lid, _ in combo))
    return out


def _period_alpha_options(model: NetworkModel, grid: TimeGrid, budgets: UncertaintyBudgets,
                          w: int, d: int, t: int) -> list[dict[str, np.ndarray]]:
    free = [r for r in model.renewables if r.alpha_dev[w, d, t] > 0]
    patterns = _bit_patterns(budgets.n_bits)
    devs = [bit_deviation(p) for p in patterns]
    budget = budgets.alpha_budget(model, grid, w, d, t) + 1e-9
    out = []
    for combo in itertools.product(range(len(patterns)), repeat=len(free)):
        if sum(devs[i] for i in combo) <= budget:
            out.append({r.id: patterns[i] for r, i in zip(free, combo)})
    return out


def count_realizations(plan: InvestmentPlan, model: NetworkModel, grid: TimeGrid,
                       budgets: UncertaintyBudgets) -> int:
    total = 1
    for w in range(grid.W):
        for d in range(grid.D):
            total *= len(_day_outage_options(model, plan, budgets, w, d))
    for _, w, d, t in grid.periods():
        total *= len(_period_alpha_options(model, grid, budgets, w, d, t))
    return total


def brute_force_worst_case(plan: InvestmentPlan, model: NetworkModel, grid: TimeGrid, budgets: UncertaintyBudgets,
                           cap: int = 200_000, params: SolverParams | None = None,
                           backend: str | None = None) -> WorstCase:
    """Solve the dispatch LP at every realisation of the discrete set; keep the max.

    Ties (within 1e-9 relative) go to the lexicographically smallest
    realisation encoding.
    """
    if len(model.lines) > 12:
        raise EnumerationTooLarge("oracle supports at most 12 lines")
    days = [(w, d) for w in range(grid.W) for d in range(grid.D)]
    day_opts = [_day_outage_options(model, plan, budgets, w, d) for w, d in days]
    per = list(grid.periods())
    alpha_opts = [_period_alpha_options(model, grid, budgets, w, d, t) for _, w, d, t in per]
    total = math.prod(len(o) for o in day_opts) * math.prod(len(o) for o in alpha_opts)
    if total > cap:
        raise EnumerationTooLarge(f"{total} realisations exceed the enumeration cap {cap}")

    tpl = build_template(model, grid)
    base = InvestmentPlan(dict(plan.storage_capacity), {})  # undergrounding already reflected in options
    best_val, best_key, best_xi = -math.inf, None, None

    def realization(outs, alphas) -> AdversaryRealization:
        deen = {ln.id: np.zeros(grid.day_shape, dtype=bool) for ln in model.lines}
        for (w, d), chosen in zip(days, outs):
            for lid in chosen:
                deen[lid][w, d] = True
        alpha, abits = {}, {}
        for r in model.renewables:
            a = np.array(r.alpha_avg, dtype=float)
            bb = np.zeros(grid.shape + (budgets.n_bits,), dtype=np.int8)
            bb[..., 0] = 1
            for (_, w, d, t), opt in zip(per, alphas):
                if r.id in opt:
                    bb[w, d, t] = opt[r.id]
                    a[w, d, t] = decode_alpha(opt[r.id], float(r.alpha_avg[w, d, t]), float(r.alpha_dev[w, d, t]))
            alpha[r.id], abits[r.id] = a, bb
        return AdversaryRealization(deen, alpha, abits)

    m = Model("oracle")
    inst = instantiate(tpl, m, np.zeros(len(tpl.params)))
    m.minimize(inst.cost)
    solver = PersistentSolver(m, params, backend)
    prow = tpl.parametric_rows
    rows = [inst.rows[i] for i in prow]

    for outs in itertools.product(*day_opts):
        for alphas in itertools.product(*alpha_opts):
            xi = realization(outs, alphas)
            full = tpl.rhs(parameter_values(tpl, base, xi))
            solver.set_rhs(rows, full[prow])
            res = solver.solve()
            if not res.optimal:
                raise RuntimeError(f"dispatch LP not optimal during enumeration: {res.status.value}")
            val = res.objective
            key = xi.encoding()
            tol = 1e-9 * max(1.0, abs(best_val)) if best_val > -math.inf else 0.0
            if val > best_val + tol or (abs(val - best_val) <= tol and key < best_key):
                if val > best_val + tol:
                    best_val = val
                best_key, best_xi = key, xi
    return WorstCase(best_xi, best_val, None, best_val, True, total)
