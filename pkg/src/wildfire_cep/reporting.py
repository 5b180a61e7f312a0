"""Report tables produced by ``solve``/``sweep``/``evaluate``/``cluster``.

Every CSV has a fixed header (the ``*_HEADER`` constants below); rows are
emitted in model order so the files are byte-stable for a given input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AdversaryRealization, DispatchSolution, InvestmentPlan, NetworkModel, TimeGrid
from .risk import RepresentativeSet

INVESTMENT_HEADER = ("gamma_r", "gamma_alpha", "scheme", "status", "total_storage_mwh", "underground_lines",
                     "investment_cost", "operating_cost", "total_cost", "iterations", "error")
STORAGE_HEADER = ("gamma_r", "gamma_alpha", "storage_id", "bus", "capacity_mwh")
STORAGE_BY_BUS_HEADER = ("gamma_r", "gamma_alpha", "bus", "capacity_mwh")
UNDERGROUND_HEADER = ("gamma_r", "gamma_alpha", "line_id", "underground")
SHED_HEADER = ("gamma_r", "gamma_alpha", "scheme", "avg_daily_shed_mwh")
DEENERGIZATION_HEADER = ("gamma_r", "gamma_alpha", "line_id", "days_deenergized", "weighted_days")
ALPHA_HEADER = ("gamma_r", "gamma_alpha", "renewable_id", "week", "day", "hour", "alpha_avg", "alpha_dev",
                "alpha_worst")
DISPATCH_HEADER = ("week", "day", "hour", "kind", "id", "value")
ENVELOPE_HEADER = ("line_id", "cluster", "medoid_week", "weight", "day", "medoid_risk", "risk_avg", "risk_dev",
                   "lower", "upper")


@dataclass
class CellReport:
    """Rows contributed by one (gamma_r, gamma_alpha) cell."""

    investment: list[tuple] = field(default_factory=list)
    storage: list[tuple] = field(default_factory=list)
    storage_by_bus: list[tuple] = field(default_factory=list)
    underground: list[tuple] = field(default_factory=list)
    shed: list[tuple] = field(default_factory=list)
    deenergization: list[tuple] = field(default_factory=list)
    alpha: list[tuple] = field(default_factory=list)


TABLES = {
    "investment": INVESTMENT_HEADER,
    "storage": STORAGE_HEADER,
    "storage_by_bus": STORAGE_BY_BUS_HEADER,
    "underground": UNDERGROUND_HEADER,
    "shed": SHED_HEADER,
    "deenergization": DEENERGIZATION_HEADER,
    "alpha": ALPHA_HEADER,
}


def cell_report(gr: float, ga: float, scheme: str, status: str, model: NetworkModel, grid: TimeGrid,
                plan: InvestmentPlan, realization: AdversaryRealization, dispatch: DispatchSolution,
                investment_cost: float, operating_cost: float, iterations: int) -> CellReport:
    rep = CellReport()
    caps = {s.id: plan.capacity(s) for s in model.candidates}
    n_ug = sum(1 for ln in model.lines if plan.is_underground(ln.id))
    rep.investment.append((gr, ga, scheme, status, sum(caps.values()), n_ug, investment_cost, operating_cost,
                           investment_cost + operating_cost, iterations, ""))
    by_bus: dict[str, float] = {}
    for s in model.candidates:
        rep.storage.append((gr, ga, s.id, s.bus, caps[s.id]))
        by_bus[s.bus] = by_bus.get(s.bus, 0.0) + caps[s.id]
    for b in model.bus_ids:
        if b in by_bus:
            rep.storage_by_bus.append((gr, ga, b, by_bus[b]))
    for ln in model.lines:
        rep.underground.append((gr, ga, ln.id, plan.is_underground(ln.id)))
    rep.shed.append((gr, ga, scheme, dispatch.average_daily_shed(grid)))
    weights = np.asarray(grid.week_weight)
    for ln in model.lines:
        flags = np.asarray(realization.deenergize.get(ln.id, np.zeros(grid.day_shape)), dtype=float)
        rep.deenergization.append((gr, ga, ln.id, int(flags.sum()), float((flags.sum(axis=1) * weights).sum())))
    for r in model.renewables:
        worst = realization.alpha.get(r.id, r.alpha_avg)
        for _, w, d, t in grid.periods():
            rep.alpha.append((gr, ga, r.id, grid.weeks[w], d + 1, t + 1, float(r.alpha_avg[w, d, t]),
                              float(r.alpha_dev[w, d, t]), float(worst[w, d, t])))
    return rep


def failed_cell(gr: float, ga: float, scheme: str, error: str) -> CellReport:
    rep = CellReport()
    rep.investment.append((gr, ga, scheme, "failed", "", "", "", "", "", "", error))
    return rep


def merge(reports) -> CellReport:
    out = CellReport()
    for rep in reports:
        for name in TABLES:
            getattr(out, name).extend(getattr(rep, name))
    return out


def dispatch_rows(model: NetworkModel, grid: TimeGrid, sol: DispatchSolution) -> list[tuple]:
    rows = []
    series = [
        ("p_thermal", [g.id for g in model.thermals], sol.p_thermal),
        ("p_renewable", [r.id for r in model.renewables], sol.p_renewable),
        ("flow", [ln.id for ln in model.lines], sol.flow),
        ("charge", [s.id for s in model.storages], sol.charge),
        ("discharge", [s.id for s in model.storages], sol.discharge),
        ("soc", [s.id for s in model.storages], sol.soc),
        ("shed", model.bus_ids, sol.shed),
    ]
    for _, w, d, t in grid.periods():
        for kind, ids, values in series:
            for i in ids:
                rows.append((grid.weeks[w], d + 1, t + 1, kind, i, float(values[i][w, d, t])))
    return rows


def envelope_rows(reps: RepresentativeSet) -> list[tuple]:
    rows = []
    for c, mi in enumerate(reps.medoids):
        week = reps.week_ids[mi] if reps.week_ids else str(mi)
        for li, lid in enumerate(reps.lines):
            for d in range(reps.risk_avg.shape[2]):
                avg, dev = float(reps.risk_avg[c, li, d]), float(reps.risk_dev[c, li, d])
                rows.append((lid, c, week, reps.weights[c], d + 1, float(reps.medoid_weeks[c, li, d]), avg, dev,
                             avg - dev, avg + dev))
    return rows
