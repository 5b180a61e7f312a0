"""Robust storage and undergrounding planning under wildfire de-energisation risk."""

from .adversary import (
    UncertaintyBudgets,
    WorstCase,
    brute_force_worst_case,
    build_subproblem,
    decode_alpha,
    encode_alpha,
    solve_subproblem,
)
from .ccg import CcgConfig, MasterState, Scheme, build_master, ccg_solve
from .core import (
    AdversaryRealization,
    Annualization,
    Bus,
    DispatchSolution,
    InvestmentPlan,
    Line,
    NetworkModel,
    RenewableGen,
    Storage,
    ThermalGen,
    TimeGrid,
    total_investment_cost,
    validate_network,
)
from .dispatch import DispatchProblem, build_dispatch, solve_dispatch
from .risk import RepresentativeSet, RiskHistory, kmedoids_weeks, line_risk_from_cells, thresholds

__version__ = "0.1.0"

__all__ = [
    "AdversaryRealization", "Annualization", "Bus", "CcgConfig", "DispatchProblem", "DispatchSolution",
    "InvestmentPlan", "Line", "MasterState", "NetworkModel", "RenewableGen", "RepresentativeSet", "RiskHistory",
    "Scheme", "Storage", "ThermalGen", "TimeGrid", "UncertaintyBudgets", "WorstCase", "brute_force_worst_case",
    "build_dispatch", "build_master", "build_subproblem", "ccg_solve", "decode_alpha", "encode_alpha",
    "kmedoids_weeks", "line_risk_from_cells", "solve_dispatch", "solve_subproblem", "thresholds",
    "total_investment_cost", "validate_network",
]
