"""Small algebraic modelling layer with pluggable solver backends."""

from .backends import (
    BackendUnavailable,
    PersistentSolver,
    SolveResult,
    SolverParams,
    Status,
    available_backends,
    solve,
)
from .export import FORMATS, UnsupportedFormat, export_model, to_lp, to_mps
from .model import INF, Constraint, LinExpr, Model, ModelError, Sense, Var, VarType, quicksum

__all__ = [
    "BackendUnavailable", "Constraint", "FORMATS", "INF", "LinExpr", "Model", "ModelError",
    "PersistentSolver", "Sense", "SolveResult", "SolverParams", "Status", "UnsupportedFormat",
    "Var", "VarType", "available_backends", "export_model", "quicksum", "solve", "to_lp", "to_mps",
]
