"""Run configuration (JSON) and assembly of a solvable instance from it."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .adversary import ALPHA_SCALES, UncertaintyBudgets
from .ccg import CcgConfig, Scheme
from .core import Annualization, NetworkModel, TimeGrid, validate_network
from .io import (
    InputError,
    build_network,
    network_hash,
    read_availability,
    read_network,
    read_risk_history,
)
from .milp.backends import BACKEND_ENV, DEFAULT_BACKEND
from .risk import RepresentativeSet, kmedoids_weeks, thresholds

log = logging.getLogger("wildfire_cep")

_PATH_FIELDS = ("network", "risk_history", "availability", "representatives", "out")


@dataclass(frozen=True)
class RunConfig:
    network: Path
    risk_history: Path | None = None
    availability: Path | None = None
    representatives: Path | None = None
    k: int = 3
    distance: str = "euclidean"
    percentile: float = 95.0
    seed: int = 0
    days_per_week: int = 1  # used only without a risk history
    gamma_r: tuple[float, ...] = (0.5,)
    gamma_alpha: tuple[float, ...] = (0.5,)
    n_bits: int = 8
    alpha_scale: str = "renewables"
    big_m_dual: float | None = None
    scheme: Scheme = Scheme.STORAGE_AND_UNDERGROUND
    gap_tol: float = 1e-4
    max_iterations: int = 20
    annualization_storage: float = 1.0
    annualization_underground: float = 1.0
    backend: str | None = None
    workers: int = 1
    out: Path = Path("out")

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        for name in ("gamma_r", "gamma_alpha"):
            v = getattr(self, name)
            v = (float(v),) if isinstance(v, (int, float)) else tuple(float(x) for x in v)
            if not v:
                raise InputError(f"config: {name} grid must be nonempty")
            object.__setattr__(self, name, v)
        if self.alpha_scale not in ALPHA_SCALES:
            raise InputError(f"config: alpha_scale must be one of {ALPHA_SCALES}")
        for p in _PATH_FIELDS:
            v = getattr(self, p)
            if v is not None:
                object.__setattr__(self, p, Path(v))

    @property
    def backend_key(self) -> str:
        # config wins over the environment, which wins over the default
        return self.backend or os.environ.get(BACKEND_ENV) or DEFAULT_BACKEND

    @property
    def ccg(self) -> CcgConfig:
        return CcgConfig(self.gap_tol, self.max_iterations, self.scheme,
                         Annualization(self.annualization_storage, self.annualization_underground))

    def budgets(self, gamma_r: float, gamma_alpha: float) -> UncertaintyBudgets:
        return UncertaintyBudgets(gamma_r, gamma_alpha, self.n_bits, alpha_scale=self.alpha_scale,
                                  big_m_dual=self.big_m_dual)

    def check_files(self) -> None:
        for p in ("network", "risk_history", "availability", "representatives"):
            v = getattr(self, p)
            if v is not None and not v.exists():
                raise InputError(f"config: {p} file {v} does not exist")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Path):
                v = str(v)
            elif isinstance(v, Scheme):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def load_config(path: str | os.PathLike, **overrides) -> RunConfig:
    """Read a JSON config; relative paths are resolved against its directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"config file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    ann = data.pop("annualization", None)
    if ann:
        data.setdefault("annualization_storage", ann.get("storage", 1.0))
        data.setdefault("annualization_underground", ann.get("underground", 1.0))
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(f"{path}: unknown config key(s) {', '.join(unknown)}")
    if "network" not in data:
        raise InputError(f"{path}: missing required key 'network'")
    for p in _PATH_FIELDS:
        if data.get(p) is not None and not Path(data[p]).is_absolute():
            data[p] = str(path.parent / data[p])
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**data)
    cfg.check_files()
    return cfg


@dataclass
class Instance:
    model: NetworkModel
    grid: TimeGrid
    digest: str
    representatives: RepresentativeSet | None = None
    thresholds: dict[str, float] = field(default_factory=dict)


def cluster_from_config(cfg: RunConfig) -> tuple[RepresentativeSet, dict[str, float], int]:
    """Representative weeks, per-line thresholds and days per week."""
    if cfg.representatives is not None:
        data = json.loads(cfg.representatives.read_text())
        reps = RepresentativeSet.from_dict(data.get("representatives", data))
        ths = {k: float(v) for k, v in data.get("thresholds", {}).items()}
        if not ths and cfg.risk_history is not None:
            ths = thresholds(read_risk_history(cfg.risk_history), cfg.percentile)
        return reps, ths, int(np.asarray(reps.risk_avg).shape[2])
    if cfg.risk_history is None:
        raise InputError("config: either risk_history or representatives is required for clustering")
    history = read_risk_history(cfg.risk_history)
    if cfg.k > history.n_weeks:
        raise InputError(f"config: k={cfg.k} exceeds the {history.n_weeks} weeks of risk history")
    reps = kmedoids_weeks(history, cfg.k, cfg.distance, cfg.seed)
    return reps, thresholds(history, cfg.percentile), history.days_per_week


def prepare(cfg: RunConfig) -> Instance:
    doc = read_network(cfg.network)
    availability = read_availability(cfg.availability) if cfg.availability else None
    reps, ths = None, {}
    if cfg.risk_history is not None or cfg.representatives is not None:
        reps, ths, days = cluster_from_config(cfg)
        week_ids = [reps.week_ids[i] if reps.week_ids else f"w{c + 1}" for c, i in enumerate(reps.medoids)]
        grid = TimeGrid(tuple(week_ids), reps.weights, days, doc.hours_per_day)
        risk = {}
        for lid, (avg, dev) in reps.line_profiles().items():
            if lid not in ths:
                raise InputError(f"no threshold for line {lid!r}")
            risk[lid] = (avg, dev, ths[lid])
    else:
        week_ids = ["w1"]
        grid = TimeGrid(("w1",), (1.0,), cfg.days_per_week, doc.hours_per_day)
        risk = None
    model = build_network(doc, grid, week_ids, risk, availability)
    problems = validate_network(model, grid)
    if problems:
        raise InputError("invalid network:\n  " + "\n  ".join(str(p) for p in problems))
    return Instance(model, grid, network_hash(model, grid), reps, ths)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
