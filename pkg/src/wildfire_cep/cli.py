"""Command-line workflow: ``cluster``, ``solve``, ``sweep``, ``evaluate``, ``export-model``.

Exit codes: 0 success/converged, 1 input or solver error, 2 finished but
not converged (files are still written and flagged).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import reporting
from .adversary import build_subproblem
from .ccg import MasterState, build_master, ccg_solve
from .config import Instance, RunConfig, cluster_from_config, load_config, prepare, with_overrides
from .core import AdversaryRealization, InvestmentPlan, total_investment_cost
from .dispatch import DispatchProblem, build_dispatch, solve_dispatch
from .io import (
    InputError,
    check_realization,
    read_plan,
    read_realization,
    write_csv,
    write_json,
)
from .milp import FORMATS, export_model

log = logging.getLogger("wildfire_cep")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


def _cell_name(gr: float, ga: float) -> str:
    return f"gr{gr:g}_ga{ga:g}"


def write_tables(out: Path, rep: reporting.CellReport) -> None:
    for name, header in reporting.TABLES.items():
        write_csv(out / f"{name}.csv", header, getattr(rep, name))


# -- cluster ------------------------------------------------------------------

def cmd_cluster(cfg: RunConfig) -> int:
    reps, ths, days = cluster_from_config(cfg)
    out = cfg.out
    write_json(out / "representatives.json", {
        "representatives": reps.to_dict(),
        "thresholds": dict(sorted(ths.items())),
        "percentile": cfg.percentile,
        "k": cfg.k,
        "distance": cfg.distance,
        "seed": cfg.seed,
        "days_per_week": days,
    })
    write_csv(out / "envelope.csv", reporting.ENVELOPE_HEADER, reporting.envelope_rows(reps))
    log.info("clustered into %d representative weeks with weights %s", reps.k, list(reps.weights))
    return EXIT_OK


# -- solve --------------------------------------------------------------------

@dataclass
class CellResult:
    report: reporting.CellReport
    converged: bool
    wall_time: float


def solve_cell(cfg: RunConfig, inst: Instance, gr: float, ga: float, out: Path) -> CellResult:
    started = time.perf_counter()
    out.mkdir(parents=True, exist_ok=True)
    budgets = cfg.budgets(gr, ga)
    cut_log = out / "cut_log.jsonl"
    if cut_log.exists():
        cut_log.unlink()
    state = ccg_solve(inst.model, inst.grid, budgets, cfg.ccg, backend=cfg.backend_key, cut_log_path=cut_log,
                      logger=log)
    plan = state.incumbent or InvestmentPlan.empty(inst.model)
    wc = state.worst_case
    realization = wc.realization if wc else AdversaryRealization.nominal(inst.model, inst.grid)
    sol = solve_dispatch(DispatchProblem(inst.model, inst.grid, plan, realization), backend=cfg.backend_key)
    inv = total_investment_cost(plan, inst.model, cfg.ccg.annualization)
    meta = {
        "network_hash": inst.digest,
        "gamma_r": gr,
        "gamma_alpha": ga,
        "scheme": cfg.scheme.value,
        "seed": cfg.seed,
        "n_bits": cfg.n_bits,
    }
    write_json(out / "plan.json", {
        **meta,
        "plan": plan.to_dict(),
        "status": state.status,
        "converged": state.converged,
        "iterations": state.iteration,
        "lower_bound": _finite(state.lower_bound),
        "upper_bound": _finite(state.upper_bound),
        "investment_cost": inv,
        "operating_cost": sol.objective,
    })
    write_json(out / "worst_case.json", {**meta, "objective": sol.objective, "realization": realization.to_dict()})
    write_csv(out / "dispatch.csv", reporting.DISPATCH_HEADER, reporting.dispatch_rows(inst.model, inst.grid, sol))
    rep = reporting.cell_report(gr, ga, cfg.scheme.value, state.status, inst.model, inst.grid, plan, realization,
                                sol, inv, sol.objective, state.iteration)
    write_tables(out, rep)
    elapsed = time.perf_counter() - started
    # timing is kept out of the deterministic files
    write_json(out / "timing.json", {"wall_time": elapsed,
                                      "iterations": [r["wall_time"] for r in state.cut_log]})
    return CellResult(rep, state.converged, elapsed)


def _finite(v: float):
    return v if v not in (float("inf"), float("-inf")) else None


def cmd_solve(cfg: RunConfig) -> int:
    inst = prepare(cfg)
    if len(cfg.gamma_r) != 1 or len(cfg.gamma_alpha) != 1:
        log.warning("solve uses the first value of each budget grid; use sweep for the full grid")
    res = solve_cell(cfg, inst, cfg.gamma_r[0], cfg.gamma_alpha[0], cfg.out)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


# -- sweep --------------------------------------------------------------------

def _sweep_worker(args) -> tuple[reporting.CellReport, bool]:
    cfg, gr, ga = args
    logging.basicConfig(level=logging.WARNING)
    try:
        inst = prepare(cfg)
        res = solve_cell(cfg, inst, gr, ga, cfg.out / "cells" / _cell_name(gr, ga))
        return res.report, res.converged
    except Exception as exc:  # recorded per cell; the sweep goes on
        return reporting.failed_cell(gr, ga, cfg.scheme.value, f"{type(exc).__name__}: {exc}"), False


def cmd_sweep(cfg: RunConfig) -> int:
    prepare(cfg)  # fail fast on bad inputs
    cells = [(cfg, gr, ga) for gr in cfg.gamma_r for ga in cfg.gamma_alpha]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_sweep_worker, cells))
    else:
        results = [_sweep_worker(c) for c in cells]
    write_tables(cfg.out, reporting.merge(r for r, _ in results))
    failed = [c[1:] for c, (r, _) in zip(cells, results) if r.investment[0][3] == "failed"]
    for gr, ga in failed:
        log.error("cell gamma_r=%g gamma_alpha=%g failed", gr, ga)
    if failed:
        return EXIT_ERROR
    return EXIT_OK if all(ok for _, ok in results) else EXIT_NOT_CONVERGED


# -- evaluate -----------------------------------------------------------------

def cmd_evaluate(cfg: RunConfig, plan_path: Path, realization_path: Path) -> int:
    inst = prepare(cfg)
    plan, plan_meta = read_plan(plan_path)
    realization, real_meta = read_realization(realization_path)
    for path, meta in ((plan_path, plan_meta), (realization_path, real_meta)):
        digest = meta.get("network_hash")
        if digest is not None and digest != inst.digest:
            raise InputError(f"{path}: network hash {digest[:12]}... does not match the configured network "
                             f"({inst.digest[:12]}...)")
    problems = plan.violations(inst.model)
    if problems:
        raise InputError("plan does not fit the network: " + "; ".join(str(p) for p in problems))
    check_realization(realization, inst.model, inst.grid)
    sol = solve_dispatch(DispatchProblem(inst.model, inst.grid, plan, realization), backend=cfg.backend_key)
    out = cfg.out
    write_csv(out / "dispatch.csv", reporting.DISPATCH_HEADER, reporting.dispatch_rows(inst.model, inst.grid, sol))
    write_json(out / "evaluation.json", {
        "network_hash": inst.digest,
        "objective": sol.objective,
        "total_shed_mwh": sol.total_shed(inst.grid),
        "avg_daily_shed_mwh": sol.average_daily_shed(inst.grid),
    })
    return EXIT_OK


# -- export-model -------------------------------------------------------------

def cmd_export_model(cfg: RunConfig, which: str, fmt: str, path: Path) -> int:
    inst = prepare(cfg)
    plan = InvestmentPlan.empty(inst.model)
    if which == "dispatch":
        realization = AdversaryRealization.nominal(inst.model, inst.grid)
        model = build_dispatch(DispatchProblem(inst.model, inst.grid, plan, realization)).model
    elif which == "subproblem":
        model = build_subproblem(plan, inst.model, inst.grid, cfg.budgets(cfg.gamma_r[0], cfg.gamma_alpha[0])).model
    else:
        model = build_master(MasterState(), inst.model, inst.grid, cfg.ccg).model
    export_model(model, path, fmt)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wildfire-cep", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path)
        return p

    common(sub.add_parser("cluster", help="pick representative weeks from the risk history"))
    for name in ("solve", "sweep"):
        p = common(sub.add_parser(name, help="robust plan for one budget pair" if name == "solve"
                                  else "robust plans over the budget grid"))
        p.add_argument("--gamma-r", type=_floats, help="comma-separated risk budgets")
        p.add_argument("--gamma-alpha", type=_floats, help="comma-separated availability budgets")
        p.add_argument("--scheme", choices=["storage_only", "storage_and_underground"])
        p.add_argument("--workers", type=int)
    p = common(sub.add_parser("evaluate", help="dispatch a plan under a given realisation"))
    p.add_argument("--plan", required=True, type=Path)
    p.add_argument("--realization", required=True, type=Path)
    p = common(sub.add_parser("export-model", help="write an optimisation model as LP/MPS"))
    p.add_argument("--which", choices=["dispatch", "subproblem", "master"], default="dispatch")
    p.add_argument("--format", choices=list(FORMATS))
    p.add_argument("--output", required=True, type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, seed=args.seed, out=args.out,
                             gamma_r=getattr(args, "gamma_r", None), gamma_alpha=getattr(args, "gamma_alpha", None),
                             scheme=getattr(args, "scheme", None), workers=getattr(args, "workers", None))
        if args.command == "cluster":
            return cmd_cluster(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.plan, args.realization)
        return cmd_export_model(cfg, args.which, args.format, args.output)
    except (InputError, KeyError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
