import json

import numpy as np
import pytest

from helpers import exhaustive_min_max
from wildfire_cep import (
    AdversaryRealization,
    CcgConfig,
    InvestmentPlan,
    MasterState,
    Scheme,
    UncertaintyBudgets,
    build_master,
    ccg_solve,
    solve_subproblem,
    total_investment_cost,
)
from wildfire_cep.adversary import count_realizations
from wildfire_cep.ccg import load_checkpoint, plan_from_master
from wildfire_cep.dispatch import DispatchProblem, solve_dispatch
from wildfire_cep.fixtures import desk_three_bus, islanding, meshed_four_bus
from wildfire_cep.milp import solve


def _master(state, model, grid, config=None):
    master = build_master(state, model, grid, config or CcgConfig())
    res = solve(master.model)
    assert res.optimal
    return master, res


def test_empty_master_invests_nothing():
    model, grid = desk_three_bus()
    master, res = _master(MasterState(), model, grid)
    assert res.objective == pytest.approx(0.0)
    plan = plan_from_master(master, res.x, model)
    assert plan.storage_capacity == {"s2": 0.0, "s3": 0.0}
    assert not any(plan.underground.values())
    assert res.x[master.delta.index] == pytest.approx(0.0)


def test_one_islanding_scenario_buys_exactly_the_stranded_energy():
    model, grid = desk_three_bus()
    deen = {"l1": np.array([[False, True]]), "l2": np.zeros((1, 2), bool)}
    state = MasterState(scenarios=[AdversaryRealization(deen, {})])
    master, res = _master(state, model, grid)
    plan = plan_from_master(master, res.x, model)
    # 12.5 MW over the two hours of day 2, efficiency 1; battery (25k) beats undergrounding (40k)
    assert plan.storage_capacity["s2"] == pytest.approx(25.0)
    assert plan.storage_capacity["s3"] == pytest.approx(0.0)
    assert not plan.is_underground("l1")
    energy = 2 * 2 * (12.5 + 25.0)
    assert res.objective == pytest.approx(25.0 * 1000.0 + 10.0 * energy)


def test_storage_only_pins_undergrounding():
    model, grid = islanding()
    xi = AdversaryRealization({"l1": np.ones(grid.day_shape, bool)}, {"r1": model.renewables[0].alpha_avg})
    state = MasterState(scenarios=[xi])
    both, _ = _master(state, model, grid)
    only, res = _master(state, model, grid, CcgConfig(scheme=Scheme.STORAGE_ONLY))
    assert all(v.lb == v.ub == 0.0 for v in only.underground.values())
    assert not any(plan_from_master(only, res.x, model).underground.values())
    assert both.underground["l1"].ub == 1.0


def test_zero_budgets_converge_within_two_iterations():
    model, grid = meshed_four_bus()
    state = ccg_solve(model, grid, UncertaintyBudgets(0.0, 0.0))
    assert state.converged and state.status == "converged"
    assert state.iteration <= 2


def _run(model, grid, budgets, **kw):
    return ccg_solve(model, grid, budgets, CcgConfig(**kw))


def test_bounds_incumbent_and_scenarios():
    model, grid = desk_three_bus(renewable=True)
    budgets = UncertaintyBudgets(1.0, 0.5, n_bits=3)
    state = _run(model, grid, budgets)
    assert state.converged
    lbs = [r["lower_bound"] for r in state.cut_log]
    assert all(b >= a - 1e-9 for a, b in zip(lbs, lbs[1:]))
    # no scenario is generated twice before convergence
    keys = [s.encoding() for s in state.scenarios]
    assert len(keys) == len(set(keys))
    assert all(not r["repeated_scenario"] for r in state.cut_log[:-1])
    # finitely many vertices bound the iteration count
    assert state.iteration <= count_realizations(state.incumbent, model, grid, budgets) + 1
    # re-evaluating the incumbent reproduces the upper bound
    wc = solve_subproblem(state.incumbent, model, grid, budgets)
    total = total_investment_cost(state.incumbent, model) + wc.objective
    assert total == pytest.approx(state.upper_bound, rel=1e-5)
    assert state.gap <= 1e-4


def test_desk_matches_exhaustive_min_max():
    model, grid = desk_three_bus()
    budgets = UncertaintyBudgets(gamma_r=0.5)
    state = _run(model, grid, budgets, max_iterations=20)
    want, plan = exhaustive_min_max(model, grid, budgets, (0.0, 25.0, 50.0, 100.0))
    assert state.converged
    assert state.upper_bound == pytest.approx(want, rel=1e-5)
    assert state.incumbent.storage_capacity == pytest.approx(plan.storage_capacity)


def test_scheme_two_undergrounds_the_islanding_line():
    model, grid = islanding()
    budgets = UncertaintyBudgets(0.5, 0.5, n_bits=3)
    state = _run(model, grid, budgets)
    assert state.incumbent.is_underground("l1")
    sol = solve_dispatch(DispatchProblem(model, grid, state.incumbent, state.worst_case.realization))
    assert sol.total_shed(grid) == 0.0
    only = _run(model, grid, budgets, scheme="storage_only")
    assert not only.incumbent.is_underground("l1")
    sol = solve_dispatch(DispatchProblem(model, grid, only.incumbent, only.worst_case.realization))
    assert sol.total_shed(grid) > 0.0


def test_checkpoint_resume_matches_straight_run(tmp_path):
    model, grid = desk_three_bus(renewable=True)
    budgets = UncertaintyBudgets(1.0, 0.5, n_bits=3)
    straight = _run(model, grid, budgets)
    ck = tmp_path / "state.json"
    first = ccg_solve(model, grid, budgets, CcgConfig(max_iterations=1), checkpoint_path=ck)
    assert first.iteration == 1 and not first.converged and first.status == "iteration_limit"
    saved = load_checkpoint(ck)
    assert saved.iteration == 1 and len(saved.scenarios) == 1
    resumed = ccg_solve(model, grid, budgets, CcgConfig(), checkpoint_path=ck, resume=True)
    assert resumed.converged
    assert resumed.iteration == straight.iteration
    assert resumed.upper_bound == pytest.approx(straight.upper_bound, rel=1e-9)


def test_cut_log_file(tmp_path):
    model, grid = islanding()
    path = tmp_path / "cuts.jsonl"
    state = ccg_solve(model, grid, UncertaintyBudgets(0.5, 0.5, n_bits=2), cut_log_path=path)
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(records) == state.iteration
    assert [r["iteration"] for r in records] == list(range(1, state.iteration + 1))
    assert {"lower_bound", "upper_bound", "plan", "realization", "gap", "wall_time"} <= set(records[0])


def test_state_round_trip():
    model, grid = desk_three_bus()
    state = _run(model, grid, UncertaintyBudgets(0.5))
    back = MasterState.from_dict(json.loads(json.dumps(state.to_dict())))
    assert back.upper_bound == state.upper_bound and back.incumbent == state.incumbent
    assert [s.encoding() for s in back.scenarios] == [s.encoding() for s in state.scenarios]
    assert MasterState.from_dict(MasterState().to_dict()).lower_bound == -np.inf


def test_config_validation():
    with pytest.raises(ValueError):
        CcgConfig(gap_tol=0.0)
    with pytest.raises(ValueError):
        CcgConfig(max_iterations=0)
    assert InvestmentPlan.empty(desk_three_bus()[0]).storage_capacity == {"s2": 0.0, "s3": 0.0}
