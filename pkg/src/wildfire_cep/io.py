"""Reading and writing planner inputs and outputs.

Formats:

* network: one JSON document with ``buses``, ``lines``, ``thermal``,
  ``renewable`` and ``storage`` sections (see ``data/README`` in the repo);
* risk history: CSV ``week_id,day,line_id,risk`` with 1-based days;
* availability: CSV ``renewable_id,week,day,hour,alpha_avg,alpha_dev``
  keyed by historical week id (``*`` applies to every week), 1-based
  day and hour.

Every writer goes through :func:`atomic_write` (write to a temporary file,
then rename) so readers never observe partial files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
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
from .risk import RepresentativeSet, RiskHistory

RISK_COLUMNS = ("week_id", "day", "line_id", "risk")
AVAILABILITY_COLUMNS = ("renewable_id", "week", "day", "hour", "alpha_avg", "alpha_dev")
ANY_WEEK = "*"


class InputError(ValueError):
    """Malformed input file; the message names the file, line and field."""


# -- atomic output ------------------------------------------------------------

def atomic_write(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def dump_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str | os.PathLike, data) -> Path:
    return atomic_write(path, dump_json(data))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write(path, csv_text(header, rows))


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0.0:
            return "0"  # also folds -0.0
        return repr(round(v, 9))
    return str(v)


# -- CSV readers --------------------------------------------------------------

def _read_rows(path: Path, columns: Sequence[str]) -> Iterable[tuple[int, dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, skipinitialspace=True)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in columns if c not in header]
        if missing:
            raise InputError(f"{path}: missing column(s) {', '.join(missing)} (header: {', '.join(header)})")
        reader.fieldnames = header
        for row in reader:
            yield reader.line_num, {k: (v.strip() if isinstance(v, str) else v) for k, v in row.items()}


def _number(path: Path, line: int, row: dict, key: str, kind=float):
    raw = row.get(key)
    try:
        value = kind(raw)
    except (TypeError, ValueError):
        raise InputError(f"{path}:{line}: field {key!r} has invalid value {raw!r}") from None
    if kind is float and not math.isfinite(value):
        raise InputError(f"{path}:{line}: field {key!r} must be finite")
    return value


def read_risk_history(path: str | os.PathLike) -> RiskHistory:
    path = Path(path)
    cells: dict[tuple[str, str, int], float] = {}
    week_order: list[str] = []
    line_order: list[str] = []
    max_day = 0
    for line, row in _read_rows(path, RISK_COLUMNS):
        week, lid = row["week_id"], row["line_id"]
        if not week or not lid:
            raise InputError(f"{path}:{line}: empty week_id or line_id")
        day = _number(path, line, row, "day", int)
        risk = _number(path, line, row, "risk")
        if day < 1:
            raise InputError(f"{path}:{line}: day must be >= 1")
        if risk < 0:
            raise InputError(f"{path}:{line}: risk must be nonnegative")
        if (week, lid, day) in cells:
            raise InputError(f"{path}:{line}: duplicate entry for week {week}, line {lid}, day {day}")
        cells[week, lid, day] = risk
        if week not in week_order:
            week_order.append(week)
        if lid not in line_order:
            line_order.append(lid)
        max_day = max(max_day, day)
    if not cells:
        raise InputError(f"{path}: no risk records")
    values = np.full((len(week_order), len(line_order), max_day), np.nan)
    wi = {w: i for i, w in enumerate(week_order)}
    li = {lid: i for i, lid in enumerate(line_order)}
    for (w, lid, d), v in cells.items():
        values[wi[w], li[lid], d - 1] = v
    if np.isnan(values).any():
        w, lnum, d = np.argwhere(np.isnan(values))[0]
        raise InputError(f"{path}: week {week_order[w]} has no risk for line {line_order[lnum]} on day {d + 1}")
    return RiskHistory(tuple(line_order), tuple(week_order), values)


def read_availability(path: str | os.PathLike) -> dict[str, dict[str, dict[tuple[int, int], tuple[float, float]]]]:
    """``{renewable: {week: {(day, hour): (avg, dev)}}}`` with 0-based day/hour."""
    path = Path(path)
    out: dict = {}
    for line, row in _read_rows(path, AVAILABILITY_COLUMNS):
        rid, week = row["renewable_id"], row["week"]
        day = _number(path, line, row, "day", int) - 1
        hour = _number(path, line, row, "hour", int) - 1
        avg = _number(path, line, row, "alpha_avg")
        dev = _number(path, line, row, "alpha_dev")
        if day < 0 or hour < 0:
            raise InputError(f"{path}:{line}: day and hour are 1-based")
        slot = out.setdefault(rid, {}).setdefault(week, {})
        if (day, hour) in slot:
            raise InputError(f"{path}:{line}: duplicate availability for {rid}, week {week}, day {day + 1}, "
                             f"hour {hour + 1}")
        slot[day, hour] = (avg, dev)
    return out


# -- network ------------------------------------------------------------------

@dataclass
class NetworkDocument:
    """Parsed network JSON before it is bound to a time grid."""

    data: dict
    path: Path | None = None

    @property
    def hours_per_day(self) -> int:
        return int(self.data.get("hours_per_day", 24))

    @property
    def name(self) -> str:
        return str(self.data.get("name", "network"))


def read_network(path: str | os.PathLike) -> NetworkDocument:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    for section in ("buses",):
        if section not in data:
            raise InputError(f"{path}: missing section {section!r}")
    return NetworkDocument(data, path)


def _profile(value, grid: TimeGrid, week_ids: Sequence[str], where: str) -> np.ndarray:
    """Expand a load profile (scalar, [T], [D][T] or {week: [D][T]}) to [W, D, T]."""
    if isinstance(value, Mapping):
        out = []
        for w in week_ids:
            if w in value:
                out.append(np.asarray(value[w], dtype=float))
            elif ANY_WEEK in value:
                out.append(np.asarray(value[ANY_WEEK], dtype=float))
            else:
                raise InputError(f"{where}: no profile for week {w!r}")
        arr = np.array([np.broadcast_to(a, grid.day_shape[1:] + (grid.T,)) for a in out])
        return arr
    arr = np.asarray(value, dtype=float)
    try:
        return np.broadcast_to(arr, grid.shape).copy()
    except ValueError:
        raise InputError(f"{where}: profile of shape {arr.shape} does not fit grid {grid.shape}") from None


def build_network(doc: NetworkDocument, grid: TimeGrid, week_ids: Sequence[str],
                  risk: Mapping[str, tuple[np.ndarray, np.ndarray, float]] | None = None,
                  availability: Mapping | None = None) -> NetworkModel:
    """Bind a parsed network to representative weeks.

    ``week_ids`` are the historical ids of the representative weeks (used to
    pick load and availability profiles); ``risk`` maps line id to
    ``(avg[w, d], dev[w, d], threshold)``.
    """
    d = doc.data
    where = str(doc.path or "network")
    per_mile = float(d.get("underground_cost_per_mile", 0.0))
    shed_default = float(d.get("shed_cost", 20000.0))
    try:
        buses = tuple(
            Bus(str(b["id"]), _profile(b.get("load", 0.0), grid, week_ids, f"{where}: bus {b['id']}"),
                float(b.get("shed_cost", shed_default)))
            for b in d["buses"])
        lines = []
        for ln in d.get("lines", []):
            miles = float(ln.get("length_miles", 0.0))
            cost = float(ln["underground_cost"]) if "underground_cost" in ln else miles * per_mile
            line = Line(str(ln["id"]), str(ln["from_bus"]), str(ln["to_bus"]), float(ln["susceptance"]),
                        float(ln["flow_limit"]), miles, cost)
            if risk and line.id in risk:
                avg, dev, th = risk[line.id]
                line = line.with_risk(avg, dev, th)
            lines.append(line)
        thermals = tuple(ThermalGen(str(g["id"]), str(g["bus"]), float(g.get("p_min", 0.0)), float(g["p_max"]),
                                    float(g.get("cost", 0.0))) for g in d.get("thermal", []))
        renewables = []
        for r in d.get("renewable", []):
            rid = str(r["id"])
            avg, dev = _availability(r, rid, grid, week_ids, availability, where)
            renewables.append(RenewableGen.clamped(rid, str(r["bus"]), float(r["p_max"]), avg, dev))
        storages = tuple(
            Storage(str(s["id"]), str(s["bus"]), float(s["power_limit"]), float(s.get("efficiency", 1.0)),
                    float(s.get("e_init", 0.0)), float(s.get("e_end", 0.0)), bool(s.get("is_candidate", False)),
                    float(s.get("existing_capacity", 0.0)), float(s.get("x_sup", 0.0)),
                    float(s.get("capacity_cost", 0.0)), float(s.get("discharge_cost", 0.0)))
            for s in d.get("storage", []))
    except KeyError as exc:
        raise InputError(f"{where}: missing field {exc.args[0]!r}") from None
    if risk:
        unknown = sorted(set(risk) - {ln.id for ln in lines})
        if unknown:
            raise InputError(f"risk history references unknown line(s): {', '.join(unknown)}")
    return NetworkModel(buses, tuple(lines), thermals, tuple(renewables), storages, doc.name)


def _availability(r: Mapping, rid: str, grid: TimeGrid, week_ids: Sequence[str], availability, where: str):
    if availability and rid in availability:
        table = availability[rid]
        avg = np.zeros(grid.shape)
        dev = np.zeros(grid.shape)
        for wi, wid in enumerate(week_ids):
            rows = table.get(wid, table.get(ANY_WEEK))
            if rows is None:
                raise InputError(f"availability: no rows for renewable {rid!r}, week {wid!r}")
            for di in range(grid.D):
                for ti in range(grid.T):
                    if (di, ti) not in rows:
                        raise InputError(f"availability: renewable {rid!r}, week {wid!r} lacks day {di + 1} "
                                         f"hour {ti + 1}")
                    avg[wi, di, ti], dev[wi, di, ti] = rows[di, ti]
        return avg, dev
    if "alpha_avg" in r:
        return (_profile(r["alpha_avg"], grid, week_ids, f"{where}: renewable {rid}"),
                _profile(r.get("alpha_dev", 0.0), grid, week_ids, f"{where}: renewable {rid}"))
    raise InputError(f"{where}: renewable {rid!r} has no availability data")


# -- canonical dumps and hashing ----------------------------------------------

def network_to_dict(model: NetworkModel, grid: TimeGrid) -> dict:
    def arr(a):
        return None if a is None else np.asarray(a).tolist()

    return {
        "name": model.name,
        "grid": {"weeks": list(grid.weeks), "week_weight": list(grid.week_weight),
                 "days_per_week": grid.D, "hours_per_day": grid.T},
        "buses": [{"id": b.id, "load": arr(b.load), "shed_cost": b.shed_cost} for b in model.buses],
        "lines": [{"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "susceptance": ln.susceptance,
                   "flow_limit": ln.flow_limit, "length_miles": ln.length_miles,
                   "underground_cost": ln.underground_cost, "risk_avg": arr(ln.risk_avg),
                   "risk_dev": arr(ln.risk_dev), "risk_threshold": ln.risk_threshold} for ln in model.lines],
        "thermal": [{"id": g.id, "bus": g.bus, "p_min": g.p_min, "p_max": g.p_max, "cost": g.cost}
                    for g in model.thermals],
        "renewable": [{"id": r.id, "bus": r.bus, "p_max": r.p_max, "alpha_avg": arr(r.alpha_avg),
                       "alpha_dev": arr(r.alpha_dev)} for r in model.renewables],
        "storage": [{"id": s.id, "bus": s.bus, "power_limit": s.power_limit, "efficiency": s.efficiency,
                     "e_init": s.e_init, "e_end": s.e_end, "is_candidate": s.is_candidate,
                     "existing_capacity": s.existing_capacity, "x_sup": s.x_sup,
                     "capacity_cost": s.capacity_cost, "discharge_cost": s.discharge_cost}
                    for s in model.storages],
    }


def network_hash(model: NetworkModel, grid: TimeGrid) -> str:
    text = json.dumps(network_to_dict(model, grid), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# -- plan and realisation files ------------------------------------------------

def read_plan(path: str | os.PathLike) -> tuple[InvestmentPlan, dict]:
    data = json.loads(Path(path).read_text())
    return InvestmentPlan.from_dict(data["plan"] if "plan" in data else data), data


def read_realization(path: str | os.PathLike) -> tuple[AdversaryRealization, dict]:
    data = json.loads(Path(path).read_text())
    return AdversaryRealization.from_dict(data["realization"] if "realization" in data else data), data


def check_realization(realization: AdversaryRealization, model: NetworkModel, grid: TimeGrid) -> None:
    lines = {ln.id for ln in model.lines}
    rens = {r.id for r in model.renewables}
    for lid, arr in realization.deenergize.items():
        if lid not in lines:
            raise InputError(f"realization references unknown line {lid!r}")
        if np.asarray(arr).shape != grid.day_shape:
            raise InputError(f"realization: outage flags of line {lid!r} must have shape {grid.day_shape}")
    for rid, arr in realization.alpha.items():
        if rid not in rens:
            raise InputError(f"realization references unknown renewable {rid!r}")
        if np.asarray(arr).shape != grid.shape:
            raise InputError(f"realization: availability of {rid!r} must have shape {grid.shape}")


def read_representatives(path: str | os.PathLike) -> RepresentativeSet:
    return RepresentativeSet.from_dict(json.loads(Path(path).read_text()))
