"""Representative weeks and per-line risk profiles from historical risk series.

Weekly risk records are flattened to vectors over (line, day) and grouped
with k-medoids. Small histories are solved exactly by enumerating every
medoid subset; larger ones use PAM (k-medoids++ seeding followed by
best-improvement swaps). Each cluster contributes one representative week weighted by its
share of the history, with a per-(line, day) mean and a max-absolute
deviation band that contains every member week.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

DISTANCES = ("euclidean", "manhattan")
EXACT_LIMIT = 20_000  # medoid subsets enumerated before falling back to PAM


@dataclass(frozen=True)
class RiskHistory:
    lines: tuple[str, ...]
    week_ids: tuple[str, ...]
    values: np.ndarray  # [week, line, day]

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "week_ids", tuple(str(w) for w in self.week_ids))
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 3:
            raise ValueError("risk history must be a [week, line, day] array")
        if arr.shape[:2] != (len(self.week_ids), len(self.lines)):
            raise ValueError(f"history shape {arr.shape} does not match {len(self.week_ids)} weeks x "
                             f"{len(self.lines)} lines")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("risk scores must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_weeks(self) -> int:
        return self.values.shape[0]

    @property
    def days_per_week(self) -> int:
        return self.values.shape[2]

    def vectors(self) -> np.ndarray:
        return self.values.reshape(self.n_weeks, -1)


@dataclass(frozen=True)
class RepresentativeSet:
    lines: tuple[str, ...]
    medoids: tuple[int, ...]  # indices into the history
    medoid_weeks: np.ndarray  # [cluster, line, day]
    weights: tuple[float, ...]
    membership: tuple[int, ...]  # cluster of each historical week
    risk_avg: np.ndarray  # [cluster, line, day]
    risk_dev: np.ndarray  # [cluster, line, day]
    cost: float
    week_ids: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return len(self.medoids)

    def line_profiles(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        """Per line: (avg, dev) arrays laid out ``[week, day]``."""
        return {lid: (self.risk_avg[:, i, :], self.risk_dev[:, i, :]) for i, lid in enumerate(self.lines)}

    def to_dict(self) -> dict:
        return {
            "lines": list(self.lines),
            "medoids": list(self.medoids),
            "week_ids": list(self.week_ids),
            "medoid_week_ids": [self.week_ids[i] for i in self.medoids] if self.week_ids else [],
            "weights": list(self.weights),
            "membership": list(self.membership),
            "cost": self.cost,
            "medoid_weeks": self.medoid_weeks.tolist(),
            "risk_avg": self.risk_avg.tolist(),
            "risk_dev": self.risk_dev.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RepresentativeSet":
        return cls(
            tuple(data["lines"]), tuple(data["medoids"]), np.array(data["medoid_weeks"], dtype=float),
            tuple(float(w) for w in data["weights"]), tuple(data["membership"]),
            np.array(data["risk_avg"], dtype=float), np.array(data["risk_dev"], dtype=float),
            float(data["cost"]), tuple(data.get("week_ids", ())),
        )


def distance_matrix(vectors: np.ndarray, distance: str = "euclidean") -> np.ndarray:
    if distance not in DISTANCES:
        raise ValueError(f"distance must be one of {DISTANCES}")
    diff = vectors[:, None, :] - vectors[None, :, :]
    if distance == "euclidean":
        return np.sqrt((diff ** 2).sum(axis=2))
    return np.abs(diff).sum(axis=2)


def clustering_cost(dist: np.ndarray, medoids: Sequence[int]) -> float:
    return float(dist[:, list(medoids)].min(axis=1).sum())


def _seed(dist: np.ndarray, k: int, rng: np.random.Generator) -> list[int]:
    n = dist.shape[0]
    medoids = [int(rng.integers(n))]
    while len(medoids) < k:
        near = dist[:, medoids].min(axis=1)
        weights = near ** 2
        weights[medoids] = 0.0
        if weights.sum() <= 0:
            # every remaining point coincides with a medoid; take the first unused one
            medoids.append(next(i for i in range(n) if i not in medoids))
        else:
            medoids.append(int(rng.choice(n, p=weights / weights.sum())))
    return medoids


def pam(dist: np.ndarray, k: int, seed: int = 0, n_init: int = 4,
        trace: list[float] | None = None) -> tuple[list[int], float]:
    """PAM swap search from several seeded starts; returns (medoids, cost).

    ``trace`` (if given) receives the cost after every accepted swap.
    """
    n = dist.shape[0]
    rng = np.random.default_rng(seed)
    best: tuple[list[int], float] | None = None
    for _ in range(n_init):
        medoids = _seed(dist, k, rng)
        cost = clustering_cost(dist, medoids)
        if trace is not None:
            trace.append(cost)
        while True:
            swap, swap_cost = None, cost
            for pos in range(k):
                for h in range(n):
                    if h in medoids:
                        continue
                    trial = medoids[:pos] + [h] + medoids[pos + 1:]
                    c = clustering_cost(dist, trial)
                    if c < swap_cost - 1e-12:
                        swap, swap_cost = trial, c
            if swap is None:
                break
            medoids, cost = swap, swap_cost
            if trace is not None:
                trace.append(cost)
        medoids = sorted(medoids)
        if best is None or cost < best[1] - 1e-12 or (abs(cost - best[1]) <= 1e-12 and medoids < best[0]):
            best = (medoids, cost)
    return best


def exhaustive_medoids(dist: np.ndarray, k: int) -> tuple[list[int], float]:
    """Globally optimal medoids; ties go to the lexicographically smallest set."""
    best: tuple[list[int], float] | None = None
    for combo in itertools.combinations(range(dist.shape[0]), k):
        c = clustering_cost(dist, combo)
        if best is None or c < best[1] - 1e-12:
            best = (list(combo), c)
    return best


def kmedoids_weeks(history: RiskHistory, k: int, distance: str = "euclidean", seed: int = 0,
                   n_init: int = 4, exact_limit: int = EXACT_LIMIT) -> RepresentativeSet:
    if history.n_weeks == 0:
        raise ValueError("risk history is empty")
    if not 1 <= k <= history.n_weeks:
        raise ValueError(f"k={k} must lie in [1, {history.n_weeks}] (number of weeks)")
    vecs = history.vectors()
    dist = distance_matrix(vecs, distance)
    if math.comb(history.n_weeks, k) <= exact_limit:
        medoids, cost = exhaustive_medoids(dist, k)
    else:
        medoids, cost = pam(dist, k, seed, n_init)
    # assignment: nearest medoid, ties to the lower cluster index
    membership = np.argmin(dist[:, medoids], axis=1)
    # medoids always belong to their own cluster even if duplicated elsewhere
    for c, mi in enumerate(medoids):
        membership[mi] = c
    weeks = history.values
    avg = np.empty((k,) + weeks.shape[1:])
    dev = np.empty_like(avg)
    sizes = []
    for c in range(k):
        members = weeks[membership == c]
        sizes.append(len(members))
        avg[c] = members.mean(axis=0)
        dev[c] = np.abs(members - avg[c]).max(axis=0)
    total = float(sum(sizes))
    return RepresentativeSet(
        lines=history.lines,
        medoids=tuple(int(i) for i in medoids),
        medoid_weeks=np.array(weeks[medoids]),
        weights=tuple(s / total for s in sizes),
        membership=tuple(int(c) for c in membership),
        risk_avg=avg,
        risk_dev=dev,
        cost=clustering_cost(dist, medoids),
        week_ids=history.week_ids,
    )


def line_risk_from_cells(cell_series: Mapping[str, Sequence[float]],
                         line_cells: Mapping[str, Sequence[str]]) -> dict[str, np.ndarray]:
    """Daily line risk as the maximum over the cells the line crosses."""
    out = {}
    for lid, cells in line_cells.items():
        if not cells:
            raise ValueError(f"line {lid!r} has no cells")
        missing = [c for c in cells if c not in cell_series]
        if missing:
            raise KeyError(f"line {lid!r} references unknown cells {missing}")
        out[lid] = np.max(np.array([np.asarray(cell_series[c], dtype=float) for c in cells]), axis=0)
    return out


def nearest_rank(values: Sequence[float], percentile: float) -> float:
    if not 0 < percentile <= 100:
        raise ValueError(f"percentile must lie in (0, 100], got {percentile}")
    ordered = np.sort(np.asarray(values, dtype=float).reshape(-1))
    if ordered.size == 0:
        raise ValueError("no values")
    # small slack so e.g. 95% of 100 values is rank 95, not 96 after rounding
    rank = math.ceil(percentile * ordered.size / 100.0 - 1e-9)
    return float(ordered[max(rank, 1) - 1])


def thresholds(history: RiskHistory, percentile: float) -> dict[str, float]:
    """Per-line nearest-rank percentile over all (week, day) risk values."""
    if history.n_weeks == 0:
        raise ValueError("risk history is empty")
    return {lid: nearest_rank(history.values[:, i, :], percentile) for i, lid in enumerate(history.lines)}
