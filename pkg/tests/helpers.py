"""Random instance generators and an independent reference dispatch LP.

The reference LP is written from scratch with dense matrices and
``scipy.optimize.linprog``: de-energised lines are simply dropped from the
network instead of going through the big-M angle rows, so agreement with
the package's dispatch also checks that its angle big-M is large enough.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog

from wildfire_cep import (
    AdversaryRealization,
    Bus,
    InvestmentPlan,
    Line,
    NetworkModel,
    RenewableGen,
    Storage,
    ThermalGen,
    TimeGrid,
)
from wildfire_cep.adversary import decode_alpha


def random_network(rng: np.random.Generator, grid: TimeGrid, max_buses=4, max_lines=5, max_storage=3,
                   max_renewables=2, min_lines=0, risky=True, shed_cost=None, radial=False) -> NetworkModel:
    nb = int(rng.integers(2 if max_lines else 1, max_buses + 1))
    bus_ids = [f"b{i + 1}" for i in range(nb)]
    sh, dsh = grid.shape, grid.day_shape
    buses = []
    for b in bus_ids:
        load = rng.uniform(0.0, 30.0, sh) * (rng.random() < 0.8)
        buses.append(Bus(b, np.round(load, 3), float(shed_cost or rng.uniform(500.0, 20000.0))))
    lines = []
    n_lines = int(rng.integers(min(min_lines, max_lines), max_lines + 1)) if nb > 1 else 0
    if radial:
        n_lines = min(n_lines, nb - 1)
    for i in range(n_lines):
        if radial:
            # bus i+1 hangs off an earlier bus: a forest, no loops
            a, c = int(rng.integers(i + 1)), i + 1
            if rng.random() < 0.5:
                a, c = c, a
        else:
            a, c = rng.choice(nb, 2, replace=False)
        avg = dev = th = None
        if risky and rng.random() < 0.85:
            th = 7.0
            avg = np.round(rng.uniform(2.0, 9.0, dsh), 3)
            dev = np.round(rng.uniform(0.0, 4.0, dsh), 3)
        lines.append(Line(f"l{i + 1}", bus_ids[a], bus_ids[c], float(rng.uniform(2.0, 20.0)),
                          float(rng.uniform(5.0, 40.0)), float(rng.uniform(1.0, 10.0)),
                          float(rng.uniform(1e4, 1e6)), avg, dev, th))
    thermals = []
    for i in range(int(rng.integers(1, 3))):
        thermals.append(ThermalGen(f"g{i + 1}", bus_ids[int(rng.integers(nb))], 0.0,
                                   float(rng.uniform(10.0, 80.0)), float(rng.uniform(5.0, 60.0))))
    renewables = []
    for i in range(int(rng.integers(0, max_renewables + 1))):
        avg = rng.uniform(0.2, 0.8, sh)
        dev = np.minimum(rng.uniform(0.0, 0.3, sh), np.minimum(avg, 1.0 - avg))
        renewables.append(RenewableGen(f"r{i + 1}", bus_ids[int(rng.integers(nb))], float(rng.uniform(5.0, 40.0)),
                                       np.round(avg, 4), np.round(dev, 4) * (rng.random() < 0.9)))
    storages = []
    for i in range(int(rng.integers(0, max_storage + 1))):
        eta = float(rng.uniform(0.8, 1.0))
        bus = bus_ids[int(rng.integers(nb))]
        if rng.random() < 0.5:
            cap = float(rng.uniform(5.0, 50.0))
            # equal boundary levels keep every realisation feasible (an islanded
            # battery cannot import or export the difference)
            e0 = float(rng.uniform(0, cap))
            storages.append(Storage(f"s{i + 1}", bus, float(rng.uniform(2.0, 20.0)), eta, e0, e0, False, cap,
                                    discharge_cost=float(rng.uniform(0.0, 3.0))))
        else:
            sup = float(rng.uniform(10.0, 60.0))
            e0 = float(rng.uniform(0, 5.0)) * (rng.random() < 0.5)
            storages.append(Storage(f"s{i + 1}", bus, float(rng.uniform(2.0, 20.0)), eta, e0, e0, True, 0.0, sup,
                                    float(rng.uniform(100.0, 3000.0)), float(rng.uniform(0.0, 3.0))))
    return NetworkModel(tuple(buses), tuple(lines), tuple(thermals), tuple(renewables), tuple(storages), "random")


def random_plan(rng: np.random.Generator, model: NetworkModel) -> InvestmentPlan:
    caps = {s.id: float(rng.uniform(max(s.e_init, s.e_end), s.x_sup)) for s in model.candidates}
    return InvestmentPlan(caps, {ln.id: bool(rng.random() < 0.3) for ln in model.lines})


def random_realization(rng: np.random.Generator, model: NetworkModel, grid: TimeGrid,
                       n_bits: int = 8) -> AdversaryRealization:
    deen = {ln.id: rng.random(grid.day_shape) < 0.4 for ln in model.lines}
    alpha, bits = {}, {}
    for r in model.renewables:
        bb = rng.integers(0, 2, grid.shape + (n_bits,)).astype(np.int8)
        a = np.empty(grid.shape)
        for idx in np.ndindex(*grid.shape):
            if r.alpha_dev[idx] == 0:
                bb[idx] = 0
                bb[idx + (0,)] = 1
            a[idx] = decode_alpha(bb[idx], float(r.alpha_avg[idx]), float(r.alpha_dev[idx]))
        alpha[r.id], bits[r.id] = a, bb
    return AdversaryRealization(deen, alpha, bits)


def reference_dispatch(model: NetworkModel, grid: TimeGrid, plan: InvestmentPlan,
                       realization: AdversaryRealization) -> float:
    """Optimal dispatch cost from a dense LP with outaged lines removed."""
    names: list[tuple] = []
    lb: list[float] = []
    ub: list[float] = []
    cost: list[float] = []

    def var(key, lo, hi, c=0.0):
        names.append(key)
        lb.append(lo)
        ub.append(hi)
        cost.append(c)
        return len(names) - 1

    ref = model.buses[0].id
    periods = list(grid.periods())
    V = {}
    for k, w, d, t in periods:
        wt = grid.week_weight[w]
        for g in model.thermals:
            V["pg", g.id, k] = var(("pg", g.id, k), g.p_min, g.p_max, wt * g.cost)
        for r in model.renewables:
            V["pr", r.id, k] = var(("pr", r.id, k), 0.0, r.p_max * float(realization.alpha[r.id][w, d, t]))
        for ln in model.lines:
            live = not realization.is_out(ln.id, w, d) or plan.is_underground(ln.id)
            cap = ln.flow_limit if live else 0.0
            V["f", ln.id, k] = var(("f", ln.id, k), -cap, cap)
        for b in model.buses:
            V["th", b.id, k] = var(("th", b.id, k), 0.0 if b.id == ref else -math.inf,
                                   0.0 if b.id == ref else math.inf)
            V["ls", b.id, k] = var(("ls", b.id, k), 0.0, float(b.load[w, d, t]), wt * b.shed_cost)
        for s in model.storages:
            size = plan.capacity(s) if s.is_candidate else s.existing_capacity
            V["c", s.id, k] = var(("c", s.id, k), 0.0, s.power_limit)
            V["d", s.id, k] = var(("d", s.id, k), 0.0, s.power_limit, wt * s.discharge_cost)
            V["e", s.id, k] = var(("e", s.id, k), 0.0, size)

    n = len(names)
    A_eq, b_eq = [], []

    def row(coefs: dict, rhs: float):
        a = np.zeros(n)
        for j, v in coefs.items():
            a[j] += v
        A_eq.append(a)
        b_eq.append(rhs)

    for k, w, d, t in periods:
        for b in model.buses:
            terms = {V["ls", b.id, k]: 1.0}
            for g in model.thermals:
                if g.bus == b.id:
                    terms[V["pg", g.id, k]] = terms.get(V["pg", g.id, k], 0.0) + 1.0
            for r in model.renewables:
                if r.bus == b.id:
                    terms[V["pr", r.id, k]] = 1.0
            for s in model.storages:
                if s.bus == b.id:
                    terms[V["d", s.id, k]] = 1.0
                    terms[V["c", s.id, k]] = -1.0
            for ln in model.lines:
                j = V["f", ln.id, k]
                if ln.from_bus == b.id:
                    terms[j] = terms.get(j, 0.0) - 1.0
                if ln.to_bus == b.id:
                    terms[j] = terms.get(j, 0.0) + 1.0
            row(terms, float(b.load[w, d, t]))
        for ln in model.lines:
            live = not realization.is_out(ln.id, w, d) or plan.is_underground(ln.id)
            if live:
                row({V["f", ln.id, k]: 1.0, V["th", ln.from_bus, k]: -ln.susceptance,
                     V["th", ln.to_bus, k]: ln.susceptance}, 0.0)
        for s in model.storages:
            e, c, dd = V["e", s.id, k], V["c", s.id, k], V["d", s.id, k]
            if k == 0:
                row({e: 1.0}, s.e_init)
                row({c: s.efficiency, dd: -1.0 / s.efficiency}, 0.0)
            else:
                row({e: 1.0, V["e", s.id, k - 1]: -1.0, c: -s.efficiency, dd: 1.0 / s.efficiency}, 0.0)
    K = grid.num_periods
    for s in model.storages:
        row({V["e", s.id, K - 1]: 1.0}, s.e_end)

    res = linprog(np.array(cost), A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
                  bounds=list(zip(lb, ub)), method="highs")
    if res.status != 0:
        raise RuntimeError(f"reference LP failed: {res.message}")
    return float(res.fun)


def textbook_simplex(c, A, b):
    """Minimise ``c @ x`` s.t. ``A @ x <= b``, ``x >= 0`` with ``b >= 0``.

    Dense tableau, Bland's rule; the slack basis is feasible because
    ``b >= 0``. Returns ``(objective, x)`` or ``None`` if unbounded.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :n] = c
    basis = list(range(n, n + m))
    while True:
        entering = next((j for j in range(n + m) if tab[m, j] < -1e-12), None)
        if entering is None:
            break
        col = tab[:m, entering]
        ratios = [(tab[i, -1] / col[i], basis[i], i) for i in range(m) if col[i] > 1e-12]
        if not ratios:
            return None
        _, _, pivot = min(ratios)
        tab[pivot] /= tab[pivot, entering]
        for i in range(m + 1):
            if i != pivot:
                tab[i] -= tab[i, entering] * tab[pivot]
        basis[pivot] = entering
    x = np.zeros(n + m)
    for i, j in enumerate(basis):
        x[j] = tab[i, -1]
    return -tab[m, -1], x[:n]


def exhaustive_min_max(model: NetworkModel, grid: TimeGrid, budgets, sizes, allow_underground=True):
    """Min over a discretised plan grid of investment + brute-force worst case.

    Returns ``(total, plan)``; every candidate battery takes each value in
    ``sizes`` and every risky line is either undergrounded or not.
    """
    import itertools

    from wildfire_cep import total_investment_cost
    from wildfire_cep.adversary import brute_force_worst_case

    cands = [s.id for s in model.candidates]
    risky = [ln.id for ln in model.lines if ln.at_risk]
    ug_opts = list(itertools.product((False, True), repeat=len(risky))) if allow_underground else [
        (False,) * len(risky)]
    best = (math.inf, None)
    for caps in itertools.product(sizes, repeat=len(cands)):
        for ug in ug_opts:
            plan = InvestmentPlan(dict(zip(cands, map(float, caps))), dict(zip(risky, ug)))
            total = total_investment_cost(plan, model) + brute_force_worst_case(plan, model, grid, budgets).objective
            if total < best[0] - 1e-9:
                best = (total, plan)
    return best


def write_case(directory, model, grid, **config):
    """Write a fixture as network/representatives/config files; returns the config path."""
    import json
    from pathlib import Path

    from wildfire_cep.fixtures import case_documents

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    network, reps = case_documents(model, grid)
    (directory / "network.json").write_text(json.dumps(network))
    (directory / "representatives.json").write_text(json.dumps(reps))
    cfg = {"network": "network.json", "representatives": "representatives.json", "out": "out", **config}
    path = directory / "config.json"
    path.write_text(json.dumps(cfg))
    return path


# acceptance results, printed by the terminal-summary hook in conftest.py
ACCEPTANCE: dict[int, str] = {}


class criterion:
    """Context manager that records one PASS/FAIL line for an acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.detail = ""

    def __enter__(self):
        import time

        self.started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        import time

        elapsed = time.perf_counter() - self.started
        verdict = "PASS" if exc_type is None else "FAIL"
        extra = self.detail if exc_type is None else f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        line = f"criterion {self.number} {verdict}: {self.title} ({elapsed:.1f}s) {extra}".rstrip()
        ACCEPTANCE[self.number] = line
        print(line)
        return False
