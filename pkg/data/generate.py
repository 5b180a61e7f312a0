"""Regenerate the sample input files in this directory.

    python3 data/generate.py

Everything is derived from seeded fixtures, so the output is identical on
every run.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from wildfire_cep.fixtures import case_documents, desk_three_bus, synthetic_24_bus
from wildfire_cep.io import AVAILABILITY_COLUMNS, RISK_COLUMNS, csv_text

HERE = Path(__file__).resolve().parent


def risk_history(model, n_weeks: int, rng) -> list[tuple]:
    """Weekly risk around each line's first representative profile."""
    rows = []
    for w in range(n_weeks):
        shift = 1.0 if w % 2 == 0 else -1.0
        for ln in model.lines:
            if not ln.at_risk:
                continue
            base = ln.risk_avg[0] + shift * ln.risk_dev[0] * 0.5
            noise = rng.uniform(-0.5, 0.5, base.shape) * ln.risk_dev[0]
            for d, r in enumerate(np.maximum(base + noise, 0.0), start=1):
                rows.append((f"h{w + 1:02d}", d, ln.id, round(float(r), 3)))
    return sorted(rows, key=lambda r: (r[0], r[1], r[2]))


def availability(model, grid) -> list[tuple]:
    rows = []
    for ren in model.renewables:
        for d in range(grid.D):
            for t in range(grid.T):
                rows.append((ren.id, "*", d + 1, t + 1, round(float(ren.alpha_avg[0, d, t]), 4),
                             round(float(ren.alpha_dev[0, d, t]), 4)))
    return rows


def write_case(name: str, model, grid, n_weeks: int, config: dict) -> None:
    out = HERE / name
    out.mkdir(exist_ok=True)
    network, _ = case_documents(model, grid)
    # profiles that do not depend on the week keep the file short
    for bus in network["buses"]:
        bus["load"] = bus["load"][grid.weeks[0]]
    for ren in network["renewable"]:
        del ren["alpha_avg"], ren["alpha_dev"]
    (out / "network.json").write_text(json.dumps(network, indent=1) + "\n")
    rng = np.random.default_rng(7)
    (out / "risk_history.csv").write_text(csv_text(RISK_COLUMNS, risk_history(model, n_weeks, rng)))
    if model.renewables:
        (out / "availability.csv").write_text(csv_text(AVAILABILITY_COLUMNS, availability(model, grid)))
        config = {"availability": "availability.csv", **config}
    config = {"network": "network.json", "risk_history": "risk_history.csv", **config}
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")


def main() -> None:
    model, grid = desk_three_bus(renewable=True)
    write_case("tiny", model, grid, 6, {"k": 2, "percentile": 90, "gamma_r": [0.5], "gamma_alpha": [0.5],
                                        "n_bits": 4, "out": "out"})
    model, grid = synthetic_24_bus(n_weeks=1, days=1, hours=4)
    write_case("synthetic24", model, grid, 12, {"k": 2, "percentile": 95, "gamma_r": [0.5],
                                                "gamma_alpha": [0.5], "n_bits": 2, "max_iterations": 10,
                                                "annualization": {"storage": 0.0015, "underground": 0.0015},
                                                "out": "out"})


if __name__ == "__main__":
    main()
