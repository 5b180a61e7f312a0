"""Small deterministic networks for tests, examples and the sample data set."""

from __future__ import annotations

import numpy as np

from .core import Bus, Line, NetworkModel, RenewableGen, Storage, ThermalGen, TimeGrid

SHED_COST = 20000.0


def _risk(grid: TimeGrid, day_avg, dev: float):
    """Risk profile ``[w, d]`` with the given per-day means (repeated over weeks)."""
    avg = np.tile(np.asarray(day_avg, dtype=float), (grid.W, 1))
    return avg, np.full(grid.day_shape, dev)


def desk_three_bus(renewable: bool = False) -> tuple[NetworkModel, TimeGrid]:
    """Generator at ``b1`` feeding two radial loads over risky lines.

    Day 1 is calm; on day 2 either line may be switched off (reaching the
    threshold needs a deviation share of 0.6, so a budget of 0.5 allows one
    line per day). Losing ``l1`` strands 25 MWh at ``b2``, losing ``l2``
    strands 50 MWh at ``b3``; batteries there (efficiency 1) can carry day-1
    energy across. Batteries are cheaper than both undergrounding and shed,
    so the robust plan is 25 MWh at ``b2`` and 50 MWh at ``b3``.
    """
    grid = TimeGrid(("w1",), (1.0,), 2, 2)
    sh = grid.shape
    avg, dev = _risk(grid, [1.0, 4.0], 5.0)
    buses = (
        Bus("b1", np.zeros(sh), SHED_COST),
        Bus("b2", np.full(sh, 12.5), SHED_COST),
        Bus("b3", np.full(sh, 25.0), SHED_COST),
    )
    lines = (
        Line("l1", "b1", "b2", 10.0, 100.0, 4.0, 40000.0, avg, dev, 7.0),
        Line("l2", "b1", "b3", 10.0, 100.0, 6.0, 60000.0, avg, dev, 7.0),
    )
    thermals = (ThermalGen("g1", "b1", 0.0, 500.0, 10.0),)
    storages = (
        Storage("s2", "b2", 100.0, 1.0, 0.0, 0.0, True, 0.0, 100.0, 1000.0, 0.0),
        Storage("s3", "b3", 100.0, 1.0, 0.0, 0.0, True, 0.0, 100.0, 1000.0, 0.0),
    )
    renewables = ()
    if renewable:
        renewables = (RenewableGen("r1", "b3", 10.0, np.full(sh, 0.5), np.full(sh, 0.4)),)
    return NetworkModel(buses, lines, thermals, renewables, storages, "desk_three_bus"), grid


def islanding(with_renewable: bool = True) -> tuple[NetworkModel, TimeGrid]:
    """Load bus fed by one risky line that sits above its threshold on average.

    Undergrounding the line (cheaper than the shed it prevents) removes all
    forced islanding; the candidate battery is capped well below the
    stranded energy, so a storage-only plan always sheds.
    """
    grid = TimeGrid(("w1", "w2"), (0.5, 0.5), 2, 3)
    sh = grid.shape
    avg, dev = _risk(grid, [8.0, 9.0], 1.0)
    load = np.full(sh, 20.0)
    buses = (Bus("b1", np.zeros(sh), SHED_COST), Bus("b2", load, SHED_COST))
    lines = (Line("l1", "b1", "b2", 5.0, 60.0, 10.0, 500000.0, avg, dev, 7.0),)
    thermals = (ThermalGen("g1", "b1", 0.0, 200.0, 20.0), ThermalGen("g2", "b2", 0.0, 5.0, 50.0))
    renewables = ()
    if with_renewable:
        renewables = (RenewableGen("r1", "b2", 6.0, np.full(sh, 0.5), np.full(sh, 0.3)),)
    storages = (Storage("s1", "b2", 10.0, 0.95, 0.0, 0.0, True, 0.0, 10.0, 2000.0, 1.0),)
    return NetworkModel(buses, lines, thermals, renewables, storages, "islanding"), grid


def meshed_four_bus() -> tuple[NetworkModel, TimeGrid]:
    """Four-bus ring with a chord, two renewables and an existing battery."""
    grid = TimeGrid(("w1",), (1.0,), 2, 3)
    sh = grid.shape
    hours = np.array([0.8, 1.0, 1.2])
    buses = (
        Bus("b1", np.zeros(sh), SHED_COST),
        Bus("b2", np.broadcast_to(30.0 * hours, sh), SHED_COST),
        Bus("b3", np.broadcast_to(45.0 * hours, sh), SHED_COST),
        Bus("b4", np.broadcast_to(20.0 * hours, sh), SHED_COST),
    )
    a1, d1 = _risk(grid, [5.0, 8.0], 3.0)
    a2, d2 = _risk(grid, [7.5, 6.0], 2.0)
    lines = (
        Line("l12", "b1", "b2", 12.0, 60.0, 3.0, 90000.0, a1, d1, 7.0),
        Line("l23", "b2", "b3", 8.0, 40.0, 2.0, 60000.0),
        Line("l34", "b3", "b4", 10.0, 40.0, 4.0, 120000.0, a2, d2, 7.0),
        Line("l41", "b4", "b1", 9.0, 60.0, 5.0, 150000.0, a1, d2, 7.5),
        Line("l13", "b1", "b3", 6.0, 35.0, 6.0, 180000.0, a2, d1, 8.0),
    )
    thermals = (ThermalGen("g1", "b1", 0.0, 150.0, 15.0), ThermalGen("g3", "b3", 0.0, 20.0, 60.0))
    renewables = (
        RenewableGen("r2", "b2", 25.0, np.full(sh, 0.6), np.full(sh, 0.3)),
        RenewableGen("r4", "b4", 15.0, np.full(sh, 0.4), np.full(sh, 0.25)),
    )
    storages = (
        Storage("s3", "b3", 15.0, 0.95, 5.0, 5.0, False, 30.0),
        Storage("c2", "b2", 20.0, 0.9, 0.0, 0.0, True, 0.0, 60.0, 1500.0, 0.5),
    )
    return NetworkModel(buses, lines, thermals, renewables, storages, "meshed_four_bus"), grid


# (from, to) pairs of the 24-bus reliability test system topology
_RTS24_BRANCHES = (
    (1, 2), (1, 3), (1, 5), (2, 4), (2, 6), (3, 9), (3, 24), (4, 9), (5, 10), (6, 10),
    (7, 8), (8, 9), (8, 10), (9, 11), (9, 12), (10, 11), (10, 12), (11, 13), (11, 14), (12, 13),
    (12, 23), (13, 23), (14, 16), (15, 16), (15, 21), (15, 21), (15, 24), (16, 17), (16, 19), (17, 18),
    (17, 22), (18, 21), (18, 21), (19, 20), (19, 20), (20, 23), (20, 23), (21, 22),
)
_RTS24_PEAK = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
               13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}
_RTS24_GEN_BUSES = (1, 2, 7, 13, 15, 16, 18, 21, 22, 23)


def synthetic_24_bus(n_weeks: int = 2, days: int = 2, hours: int = 4, seed: int = 24) -> tuple[NetworkModel, TimeGrid]:
    """Synthetic network with the shape of the 24-bus test system.

    24 buses, 38 lines, 33 thermal units, 3 renewables and 8 storage units
    (2 existing, 6 candidates). Topology and peak loads follow the public
    test system; every other number is drawn from a seeded generator and
    carries no claim about any real utility.
    """
    rng = np.random.default_rng(seed)
    grid = TimeGrid.uniform(n_weeks, days, hours)
    shape = (n_weeks, days, hours)
    hourly = 0.7 + 0.3 * np.sin(np.linspace(0.0, np.pi, hours))
    buses = []
    for i in range(1, 25):
        scale = rng.uniform(0.9, 1.1, (n_weeks, days, 1))
        buses.append(Bus(f"b{i}", _RTS24_PEAK.get(i, 0.0) * scale * hourly, 5000.0))
    lines = []
    for j, (a, b) in enumerate(_RTS24_BRANCHES, start=1):
        miles = float(np.round(rng.uniform(5.0, 40.0), 1))
        line = Line(f"l{j}", f"b{a}", f"b{b}", float(np.round(rng.uniform(150.0, 600.0))),
                    500.0 if j > 20 else 250.0, miles, miles * 3_000_000.0)
        if a >= 14 or b >= 21:  # the eastern half is fire prone
            avg = rng.uniform(20.0, 70.0, (n_weeks, days))
            line = line.with_risk(avg, rng.uniform(5.0, 20.0, (n_weeks, days)), 75.0)
        lines.append(line)
    sizes = rng.dirichlet(np.ones(33)) * 3600.0
    thermals = tuple(
        ThermalGen(f"g{k + 1}", f"b{_RTS24_GEN_BUSES[k % len(_RTS24_GEN_BUSES)]}", 0.0,
                   float(np.round(max(sizes[k], 12.0), 1)), float(np.round(rng.uniform(10.0, 80.0), 2)))
        for k in range(33))
    renewables = []
    for rid, bus, cap in (("r1", "b14", 300.0), ("r2", "b19", 250.0), ("r3", "b6", 200.0)):
        avg = np.clip(0.45 + 0.25 * rng.standard_normal(shape), 0.05, 0.95)
        renewables.append(RenewableGen.clamped(rid, bus, cap, avg, np.full(shape, 0.2)))
    storages = [Storage("s1", "b3", 50.0, 0.92, 40.0, 40.0, False, 200.0),
                Storage("s2", "b18", 50.0, 0.92, 40.0, 40.0, False, 200.0)]
    for n, bus in enumerate(("b15", "b16", "b19", "b20", "b21", "b24"), start=3):
        storages.append(Storage(f"s{n}", bus, 100.0, 0.9, 0.0, 0.0, True, 0.0, 400.0, 300_000.0, 1.0))
    return NetworkModel(tuple(buses), tuple(lines), thermals, tuple(renewables), tuple(storages),
                        "synthetic_24_bus"), grid


def case_documents(model: NetworkModel, grid: TimeGrid) -> tuple[dict, dict]:
    """Network JSON and representative-week JSON that rebuild ``(model, grid)`` through the CLI."""

    def per_week(arr):
        return {w: np.asarray(arr)[i].tolist() for i, w in enumerate(grid.weeks)}

    network = {
        "name": model.name,
        "hours_per_day": grid.T,
        "buses": [{"id": b.id, "load": per_week(b.load), "shed_cost": b.shed_cost} for b in model.buses],
        "lines": [{"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "susceptance": ln.susceptance,
                   "flow_limit": ln.flow_limit, "length_miles": ln.length_miles,
                   "underground_cost": ln.underground_cost} for ln in model.lines],
        "thermal": [{"id": g.id, "bus": g.bus, "p_min": g.p_min, "p_max": g.p_max, "cost": g.cost}
                    for g in model.thermals],
        "renewable": [{"id": r.id, "bus": r.bus, "p_max": r.p_max, "alpha_avg": per_week(r.alpha_avg),
                       "alpha_dev": per_week(r.alpha_dev)} for r in model.renewables],
        "storage": [{"id": s.id, "bus": s.bus, "power_limit": s.power_limit, "efficiency": s.efficiency,
                     "e_init": s.e_init, "e_end": s.e_end, "is_candidate": s.is_candidate,
                     "existing_capacity": s.existing_capacity, "x_sup": s.x_sup,
                     "capacity_cost": s.capacity_cost, "discharge_cost": s.discharge_cost}
                    for s in model.storages],
    }
    risky = [ln for ln in model.lines if ln.at_risk]
    # one representative per grid week, laid out [cluster, line, day]
    avg = np.stack([ln.risk_avg for ln in risky], axis=1) if risky else np.zeros((grid.W, 0, grid.D))
    dev = np.stack([ln.risk_dev for ln in risky], axis=1) if risky else np.zeros((grid.W, 0, grid.D))
    reps = {
        "lines": [ln.id for ln in risky],
        "medoids": list(range(grid.W)),
        "week_ids": list(grid.weeks),
        "weights": list(grid.week_weight),
        "membership": list(range(grid.W)),
        "cost": 0.0,
        "medoid_weeks": avg.tolist(),
        "risk_avg": avg.tolist(),
        "risk_dev": dev.tolist(),
    }
    return network, {"representatives": reps, "thresholds": {ln.id: ln.risk_threshold for ln in risky}}
