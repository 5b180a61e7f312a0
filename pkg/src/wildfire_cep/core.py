"""Domain types shared by every stage of the planner.

Time-indexed data is held in dense numpy arrays laid out ``[week, day, hour]``
(daily data ``[week, day]``) so that battery state-of-charge chaining across
hour, day and week boundaries is a flat scan over ``array.reshape(-1)``.
All arrays are made read-only at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Sequence

import numpy as np

WEIGHT_TOL = 1e-9


def _frozen(a, shape: tuple[int, ...] | None = None, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    if shape is not None:
        if arr.ndim == 0:
            arr = np.full(shape, arr, dtype=dtype)
        elif arr.shape != shape:
            arr = np.broadcast_to(arr, shape).astype(dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Violation:
    entity: str
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.entity}.{self.field}: {self.rule}"


@dataclass(frozen=True)
class TimeGrid:
    """Representative weeks (with weights) x days x hours."""

    weeks: tuple[str, ...]
    week_weight: tuple[float, ...]
    days_per_week: int
    hours_per_day: int

    def __post_init__(self):
        object.__setattr__(self, "weeks", tuple(str(w) for w in self.weeks))
        object.__setattr__(self, "week_weight", tuple(float(x) for x in self.week_weight))

    @classmethod
    def uniform(cls, n_weeks: int, days: int, hours: int) -> "TimeGrid":
        return cls(tuple(f"w{i + 1}" for i in range(n_weeks)), (1.0 / n_weeks,) * n_weeks, days, hours)

    @property
    def W(self) -> int:
        return len(self.weeks)

    @property
    def D(self) -> int:
        return self.days_per_week

    @property
    def T(self) -> int:
        return self.hours_per_day

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.W, self.D, self.T)

    @property
    def day_shape(self) -> tuple[int, int]:
        return (self.W, self.D)

    @property
    def num_periods(self) -> int:
        return self.W * self.D * self.T

    @property
    def weights(self) -> dict[str, float]:
        return dict(zip(self.weeks, self.week_weight))

    def period(self, w: int, d: int, t: int) -> int:
        return (w * self.D + d) * self.T + t

    def periods(self) -> Iterator[tuple[int, int, int, int]]:
        """Yield ``(k, w, d, t)`` in chronological order."""
        k = 0
        for w in range(self.W):
            for d in range(self.D):
                for t in range(self.T):
                    yield k, w, d, t
                    k += 1

    def period_weights(self) -> np.ndarray:
        return np.repeat(np.asarray(self.week_weight), self.D * self.T)

    def violations(self) -> list[Violation]:
        out = []
        if self.D < 1:
            out.append(Violation("grid", "days_per_week", "must be >= 1"))
        if self.T < 1:
            out.append(Violation("grid", "hours_per_day", "must be >= 1"))
        if not self.weeks:
            out.append(Violation("grid", "weeks", "at least one week required"))
        if len(self.week_weight) != len(self.weeks):
            out.append(Violation("grid", "week_weight", "one weight per week required"))
        if any(x < 0 for x in self.week_weight):
            out.append(Violation("grid", "week_weight", "weights must be nonnegative"))
        if abs(sum(self.week_weight) - 1.0) > WEIGHT_TOL:
            out.append(Violation("grid", "week_weight", f"weights sum to {sum(self.week_weight)!r}, not 1"))
        return out


@dataclass(frozen=True)
class Bus:
    id: str
    load: np.ndarray  # MW, [w, d, t]
    shed_cost: float  # $/MWh

    def __post_init__(self):
        object.__setattr__(self, "load", _frozen(self.load))


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    susceptance: float  # MW/rad
    flow_limit: float  # MW
    length_miles: float = 0.0
    underground_cost: float = 0.0  # $
    risk_avg: np.ndarray | None = None  # [w, d]
    risk_dev: np.ndarray | None = None  # [w, d]
    risk_threshold: float | None = None

    def __post_init__(self):
        if self.risk_avg is not None:
            object.__setattr__(self, "risk_avg", _frozen(self.risk_avg))
        if self.risk_dev is not None:
            object.__setattr__(self, "risk_dev", _frozen(self.risk_dev))

    @property
    def at_risk(self) -> bool:
        """True when the line carries risk data and may be de-energised."""
        return self.risk_avg is not None and self.risk_threshold is not None

    def with_risk(self, avg, dev, threshold: float) -> "Line":
        return replace(self, risk_avg=avg, risk_dev=dev, risk_threshold=float(threshold))


@dataclass(frozen=True)
class ThermalGen:
    id: str
    bus: str
    p_min: float
    p_max: float
    cost: float


@dataclass(frozen=True)
class RenewableGen:
    id: str
    bus: str
    p_max: float
    alpha_avg: np.ndarray  # [w, d, t]
    alpha_dev: np.ndarray  # [w, d, t]

    def __post_init__(self):
        object.__setattr__(self, "alpha_avg", _frozen(self.alpha_avg))
        object.__setattr__(self, "alpha_dev", _frozen(self.alpha_dev))

    @classmethod
    def clamped(cls, id: str, bus: str, p_max: float, avg, dev) -> "RenewableGen":
        """Build with the availability band clipped into [0, 1]."""
        avg = np.clip(np.asarray(avg, dtype=float), 0.0, 1.0)
        dev = np.maximum(np.asarray(dev, dtype=float), 0.0)
        dev = np.minimum(dev, np.minimum(avg, 1.0 - avg))
        return cls(id, bus, p_max, avg, dev)


@dataclass(frozen=True)
class Storage:
    id: str
    bus: str
    power_limit: float  # MW
    efficiency: float
    e_init: float = 0.0  # MWh
    e_end: float = 0.0  # MWh
    is_candidate: bool = False
    existing_capacity: float = 0.0  # MWh
    x_sup: float = 0.0  # MWh, candidates only
    capacity_cost: float = 0.0  # $/MWh
    discharge_cost: float = 0.0  # $/MWh

    @property
    def max_capacity(self) -> float:
        return self.x_sup if self.is_candidate else self.existing_capacity


@dataclass(frozen=True)
class NetworkModel:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...] = ()
    thermals: tuple[ThermalGen, ...] = ()
    renewables: tuple[RenewableGen, ...] = ()
    storages: tuple[Storage, ...] = ()
    name: str = "network"

    def __post_init__(self):
        for attr in ("buses", "lines", "thermals", "renewables", "storages"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

    @property
    def candidates(self) -> tuple[Storage, ...]:
        return tuple(s for s in self.storages if s.is_candidate)

    @property
    def bus_ids(self) -> list[str]:
        return [b.id for b in self.buses]

    def bus_index(self) -> dict[str, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    def line(self, line_id: str) -> Line:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise KeyError(f"unknown line {line_id!r}")

    def storage(self, storage_id: str) -> Storage:
        for s in self.storages:
            if s.id == storage_id:
                return s
        raise KeyError(f"unknown storage {storage_id!r}")

    def with_lines(self, lines: Sequence[Line]) -> "NetworkModel":
        return replace(self, lines=tuple(lines))

    @property
    def max_total_load(self) -> float:
        return float(sum(b.load.max(initial=0.0) for b in self.buses))

    @property
    def max_shed_cost(self) -> float:
        return max((b.shed_cost for b in self.buses), default=0.0)


@dataclass(frozen=True)
class InvestmentPlan:
    storage_capacity: Mapping[str, float] = field(default_factory=dict)
    underground: Mapping[str, bool] = field(default_factory=dict)

    def capacity(self, storage: Storage) -> float:
        if not storage.is_candidate:
            return storage.existing_capacity
        return float(self.storage_capacity.get(storage.id, 0.0))

    def is_underground(self, line_id: str) -> bool:
        return bool(self.underground.get(line_id, False))

    @classmethod
    def empty(cls, model: NetworkModel) -> "InvestmentPlan":
        return cls({s.id: 0.0 for s in model.candidates}, {ln.id: False for ln in model.lines})

    def violations(self, model: NetworkModel) -> list[Violation]:
        out = []
        cands = {s.id: s for s in model.candidates}
        lines = {ln.id for ln in model.lines}
        for sid, x in self.storage_capacity.items():
            if sid not in cands:
                out.append(Violation(f"plan:{sid}", "storage_capacity", "not a candidate storage"))
            elif not (-1e-9 <= x <= cands[sid].x_sup + 1e-9):
                out.append(Violation(f"plan:{sid}", "storage_capacity", f"{x} outside [0, {cands[sid].x_sup}]"))
        for lid in self.underground:
            if lid not in lines:
                out.append(Violation(f"plan:{lid}", "underground", "unknown line"))
        return out

    def to_dict(self) -> dict:
        return {
            "storage_capacity": {k: float(v) for k, v in sorted(self.storage_capacity.items())},
            "underground": {k: bool(v) for k, v in sorted(self.underground.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "InvestmentPlan":
        return cls(
            {str(k): float(v) for k, v in data.get("storage_capacity", {}).items()},
            {str(k): bool(v) for k, v in data.get("underground", {}).items()},
        )


@dataclass(frozen=True)
class AdversaryRealization:
    """One point of the joint ignition-risk / availability uncertainty set.

    ``deenergize`` and the risk arrays are ``[w, d]`` per line; ``alpha`` is
    ``[w, d, t]`` per renewable and ``alpha_bits`` ``[w, d, t, n]``.
    """

    deenergize: Mapping[str, np.ndarray]
    alpha: Mapping[str, np.ndarray]
    alpha_bits: Mapping[str, np.ndarray] = field(default_factory=dict)
    risk_gamma: Mapping[str, np.ndarray] = field(default_factory=dict)
    perceived_risk: Mapping[str, np.ndarray] = field(default_factory=dict)
    real_risk: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "deenergize", {k: _frozen(v, dtype=bool) for k, v in self.deenergize.items()})
        object.__setattr__(self, "alpha", {k: _frozen(v) for k, v in self.alpha.items()})
        object.__setattr__(self, "alpha_bits", {k: _frozen(v, dtype=np.int8) for k, v in self.alpha_bits.items()})
        for attr in ("risk_gamma", "perceived_risk", "real_risk"):
            object.__setattr__(self, attr, {k: _frozen(v) for k, v in getattr(self, attr).items()})

    @classmethod
    def nominal(cls, model: NetworkModel, grid: TimeGrid) -> "AdversaryRealization":
        """No de-energisation and every availability at its mean."""
        return cls(
            {ln.id: np.zeros(grid.day_shape, dtype=bool) for ln in model.lines},
            {r.id: np.array(r.alpha_avg) for r in model.renewables},
        )

    def is_out(self, line_id: str, w: int, d: int) -> bool:
        arr = self.deenergize.get(line_id)
        return bool(arr[w, d]) if arr is not None else False

    def encoding(self) -> tuple:
        """Hashable, order-stable key used for de-duplication and tie-breaks."""
        z = tuple((k, tuple(np.asarray(v, dtype=np.int8).reshape(-1))) for k, v in sorted(self.deenergize.items()))
        if self.alpha_bits:
            a = tuple((k, tuple(np.asarray(v).reshape(-1))) for k, v in sorted(self.alpha_bits.items()))
        else:
            a = tuple((k, tuple(np.round(np.asarray(v).reshape(-1), 12))) for k, v in sorted(self.alpha.items()))
        return (z, a)

    def outage_count(self) -> dict[str, int]:
        return {k: int(np.asarray(v).sum()) for k, v in sorted(self.deenergize.items())}

    def to_dict(self) -> dict:
        def arr(m):
            return {k: np.asarray(v).tolist() for k, v in sorted(m.items())}

        return {
            "deenergize": {k: np.asarray(v, dtype=int).tolist() for k, v in sorted(self.deenergize.items())},
            "alpha": arr(self.alpha),
            "alpha_bits": {k: np.asarray(v, dtype=int).tolist() for k, v in sorted(self.alpha_bits.items())},
            "risk_gamma": arr(self.risk_gamma),
            "perceived_risk": arr(self.perceived_risk),
            "real_risk": arr(self.real_risk),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AdversaryRealization":
        def arr(key, dtype=float):
            return {str(k): np.array(v, dtype=dtype) for k, v in data.get(key, {}).items()}

        return cls(arr("deenergize", bool), arr("alpha"), arr("alpha_bits", np.int8),
                   arr("risk_gamma"), arr("perceived_risk"), arr("real_risk"))


@dataclass(frozen=True)
class DispatchSolution:
    p_thermal: Mapping[str, np.ndarray]
    p_renewable: Mapping[str, np.ndarray]
    flow: Mapping[str, np.ndarray]
    angle: Mapping[str, np.ndarray]
    soc: Mapping[str, np.ndarray]
    charge: Mapping[str, np.ndarray]
    discharge: Mapping[str, np.ndarray]
    shed: Mapping[str, np.ndarray]
    objective: float

    def total_shed(self, grid: TimeGrid) -> float:
        """Week-weighted shed energy over one representative week (MWh)."""
        w = np.asarray(grid.week_weight)
        return float(sum((np.asarray(v).sum(axis=(1, 2)) * w).sum() for v in self.shed.values()))

    def average_daily_shed(self, grid: TimeGrid) -> float:
        return self.total_shed(grid) / grid.D


@dataclass(frozen=True)
class Annualization:
    """Multipliers converting overnight capital cost to the objective's basis."""

    storage: float = 1.0
    underground: float = 1.0


def total_investment_cost(plan: InvestmentPlan, model: NetworkModel,
                          annualization: Annualization | None = None) -> float:
    ann = annualization or Annualization()
    lines = {ln.id: ln for ln in model.lines}
    stor = {s.id: s for s in model.storages}
    cost = 0.0
    for lid, ug in plan.underground.items():
        if lid not in lines:
            raise KeyError(f"unknown line {lid!r}")
        if ug:
            cost += ann.underground * lines[lid].underground_cost
    for sid, x in plan.storage_capacity.items():
        if sid not in stor:
            raise KeyError(f"unknown storage {sid!r}")
        cost += ann.storage * stor[sid].capacity_cost * float(x)
    return cost


def validate_network(model: NetworkModel, grid: TimeGrid | None = None) -> list[Violation]:
    """Collect every invariant breach; an empty list means the model is usable."""
    out: list[Violation] = []
    if grid is not None:
        out.extend(grid.violations())
    shape = grid.shape if grid is not None else None
    day_shape = grid.day_shape if grid is not None else None

    def dupes(kind: str, items) -> None:
        seen = set()
        for it in items:
            if it.id in seen:
                out.append(Violation(f"{kind}:{it.id}", "id", "duplicate id"))
            seen.add(it.id)

    dupes("bus", model.buses)
    dupes("line", model.lines)
    dupes("gen", list(model.thermals) + list(model.renewables))
    dupes("storage", model.storages)
    buses = set(model.bus_ids)
    if not model.buses:
        out.append(Violation("network", "buses", "at least one bus required"))

    for b in model.buses:
        ent = f"bus:{b.id}"
        if shape is not None and b.load.shape != shape:
            out.append(Violation(ent, "load", f"shape {b.load.shape} does not match grid {shape}"))
        if not np.all(np.isfinite(b.load)) or np.any(b.load < 0):
            out.append(Violation(ent, "load", "loads must be finite and nonnegative"))
        if b.shed_cost < 0:
            out.append(Violation(ent, "shed_cost", "must be nonnegative"))

    for ln in model.lines:
        ent = f"line:{ln.id}"
        if ln.from_bus == ln.to_bus:
            out.append(Violation(ent, "to_bus", "from_bus and to_bus must differ"))
        for end in (ln.from_bus, ln.to_bus):
            if end not in buses:
                out.append(Violation(ent, "from_bus/to_bus", f"unknown bus {end!r}"))
        if not ln.flow_limit > 0:
            out.append(Violation(ent, "flow_limit", "must be positive"))
        if ln.susceptance == 0 or not math.isfinite(ln.susceptance):
            out.append(Violation(ent, "susceptance", "must be finite and nonzero"))
        if ln.length_miles < 0:
            out.append(Violation(ent, "length_miles", "must be nonnegative"))
        if ln.underground_cost < 0:
            out.append(Violation(ent, "underground_cost", "must be nonnegative"))
        if ln.at_risk:
            if day_shape is not None and (ln.risk_avg.shape != day_shape or ln.risk_dev.shape != day_shape):
                out.append(Violation(ent, "risk_avg", f"risk profile shape must be {day_shape}"))
            if np.any(ln.risk_dev < 0):
                out.append(Violation(ent, "risk_dev", "deviation must be nonnegative"))
            if ln.risk_threshold < 0:
                out.append(Violation(ent, "risk_threshold", "must be nonnegative"))

    for g in model.thermals:
        ent = f"thermal:{g.id}"
        if g.bus not in buses:
            out.append(Violation(ent, "bus", f"unknown bus {g.bus!r}"))
        if not 0 <= g.p_min <= g.p_max:
            out.append(Violation(ent, "p_min", "requires 0 <= p_min <= p_max"))
        if g.cost < 0:
            out.append(Violation(ent, "cost", "must be nonnegative"))

    for r in model.renewables:
        ent = f"renewable:{r.id}"
        if r.bus not in buses:
            out.append(Violation(ent, "bus", f"unknown bus {r.bus!r}"))
        if not r.p_max > 0:
            out.append(Violation(ent, "p_max", "must be positive"))
        if shape is not None and (r.alpha_avg.shape != shape or r.alpha_dev.shape != shape):
            out.append(Violation(ent, "alpha_avg", f"availability shape must be {shape}"))
        lo = r.alpha_avg - r.alpha_dev
        hi = r.alpha_avg + r.alpha_dev
        if np.any(r.alpha_dev < 0):
            out.append(Violation(ent, "alpha_dev", "deviation must be nonnegative"))
        if np.any(lo < -1e-12) or np.any(hi > 1 + 1e-12):
            out.append(Violation(ent, "alpha_avg", "availability band exceeds [0,1]"))

    for s in model.storages:
        ent = f"storage:{s.id}"
        if s.bus not in buses:
            out.append(Violation(ent, "bus", f"unknown bus {s.bus!r}"))
        if not s.power_limit > 0:
            out.append(Violation(ent, "power_limit", "must be positive"))
        if not 0 < s.efficiency <= 1:
            out.append(Violation(ent, "efficiency", "must lie in (0, 1]"))
        if s.is_candidate and not s.x_sup > 0:
            out.append(Violation(ent, "x_sup", "candidates need x_sup > 0"))
        if s.e_init < 0 or s.e_init > s.max_capacity:
            out.append(Violation(ent, "e_init", f"must lie in [0, {s.max_capacity}]"))
        if s.e_end < 0 or s.e_end > s.max_capacity:
            out.append(Violation(ent, "e_end", f"must lie in [0, {s.max_capacity}]"))
        if s.capacity_cost < 0 or s.discharge_cost < 0:
            out.append(Violation(ent, "capacity_cost", "costs must be nonnegative"))
    return out
