"""Linear/mixed-integer model container.

Variables and constraints are stored in insertion order so that every
consumer (backends, file writers) sees a deterministic layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union

import numpy as np

INF = math.inf

Number = Union[int, float]


class VarType(str, Enum):
    CONTINUOUS = "C"
    BINARY = "B"
    INTEGER = "I"


class Sense(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "=="


class ModelError(ValueError):
    """Raised for malformed models (bad bounds, foreign variables, ...)."""


class Var:
    __slots__ = ("model", "index", "name", "lb", "ub", "vtype")

    def __init__(self, model: "Model", index: int, name: str, lb: float, ub: float, vtype: VarType):
        self.model = model
        self.index = index
        self.name = name
        self.lb = lb
        self.ub = ub
        self.vtype = vtype

    __hash__ = object.__hash__

    @property
    def is_integer(self) -> bool:
        return self.vtype is not VarType.CONTINUOUS

    def to_expr(self) -> "LinExpr":
        return LinExpr({self.index: 1.0}, 0.0, self.model)

    def __repr__(self) -> str:
        return f"Var({self.name})"

    # arithmetic is delegated to LinExpr
    def __add__(self, other):
        return self.to_expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.to_expr() - other

    def __rsub__(self, other):
        return (-self.to_expr()) + other

    def __mul__(self, other):
        return self.to_expr() * other

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.to_expr() * (1.0 / other)

    def __neg__(self):
        return -self.to_expr()

    def __le__(self, other):
        return self.to_expr() <= other

    def __ge__(self, other):
        return self.to_expr() >= other

    def __eq__(self, other):  # type: ignore[override]
        return self.to_expr() == other


class LinExpr:
    """Sparse affine expression ``sum(coef * var) + const``."""

    __slots__ = ("terms", "const", "model")

    def __init__(self, terms: dict[int, float] | None = None, const: float = 0.0, model: "Model | None" = None):
        self.terms = terms if terms is not None else {}
        self.const = float(const)
        self.model = model

    @staticmethod
    def sum(items: Iterable) -> "LinExpr":
        out = LinExpr()
        for item in items:
            out._iadd(item, 1.0)
        return out

    def copy(self) -> "LinExpr":
        return LinExpr(dict(self.terms), self.const, self.model)

    def _iadd(self, other, scale: float) -> "LinExpr":
        if isinstance(other, (int, float, np.floating, np.integer)):
            self.const += scale * float(other)
            return self
        if isinstance(other, Var):
            self._check_model(other.model)
            self.terms[other.index] = self.terms.get(other.index, 0.0) + scale
            return self
        if isinstance(other, LinExpr):
            if other.model is not None:
                self._check_model(other.model)
            for k, v in other.terms.items():
                self.terms[k] = self.terms.get(k, 0.0) + scale * v
            self.const += scale * other.const
            return self
        raise TypeError(f"cannot combine LinExpr with {type(other).__name__}")

    def _check_model(self, model: "Model") -> None:
        if self.model is None:
            self.model = model
        elif self.model is not model:
            raise ModelError("expression mixes variables from different models")

    def __add__(self, other):
        return self.copy()._iadd(other, 1.0)

    __radd__ = __add__

    def __iadd__(self, other):
        return self._iadd(other, 1.0)

    def __sub__(self, other):
        return self.copy()._iadd(other, -1.0)

    def __isub__(self, other):
        return self._iadd(other, -1.0)

    def __rsub__(self, other):
        return (-self)._iadd(other, 1.0)

    def __neg__(self):
        return LinExpr({k: -v for k, v in self.terms.items()}, -self.const, self.model)

    def __mul__(self, other):
        if not isinstance(other, (int, float, np.floating, np.integer)):
            raise TypeError("only scalar multiplication keeps an expression linear")
        c = float(other)
        return LinExpr({k: c * v for k, v in self.terms.items()}, c * self.const, self.model)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / other)

    def _compare(self, other, sense: Sense) -> "Constraint":
        diff = self - other
        return Constraint(diff, sense)

    def __le__(self, other):
        return self._compare(other, Sense.LE)

    def __ge__(self, other):
        return self._compare(other, Sense.GE)

    def __eq__(self, other):  # type: ignore[override]
        return self._compare(other, Sense.EQ)

    __hash__ = None  # type: ignore[assignment]

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(v * x[k] for k, v in self.terms.items())

    def __repr__(self) -> str:
        parts = [f"{v:+g}*x{k}" for k, v in self.terms.items()]
        return "LinExpr(" + " ".join(parts) + f" {self.const:+g})"


@dataclass
class Constraint:
    """``expr (sense) 0``; normalised into ``lo <= a.x <= hi`` when added."""

    expr: LinExpr
    sense: Sense


@dataclass
class Row:
    name: str
    index: tuple[int, ...]
    value: tuple[float, ...]
    sense: Sense
    rhs: float

    @property
    def bounds(self) -> tuple[float, float]:
        if self.sense is Sense.LE:
            return -INF, self.rhs
        if self.sense is Sense.GE:
            return self.rhs, INF
        return self.rhs, self.rhs


@dataclass
class Objective:
    expr: LinExpr = field(default_factory=LinExpr)
    maximize: bool = False


class Model:
    """Owner of variables, rows and the objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.vars: list[Var] = []
        self.rows: list[Row] = []
        self.objective = Objective()

    # -- variables -----------------------------------------------------
    def add_var(self, name: str | None = None, lb: float = 0.0, ub: float = INF,
                vtype: VarType | str = VarType.CONTINUOUS) -> Var:
        vtype = VarType(vtype)
        if vtype is VarType.BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if not lb <= ub:
            raise ModelError(f"variable {name!r}: lower bound {lb} > upper bound {ub}")
        idx = len(self.vars)
        var = Var(self, idx, name or f"x{idx}", float(lb), float(ub), vtype)
        self.vars.append(var)
        return var

    def add_binary(self, name: str | None = None) -> Var:
        return self.add_var(name, 0.0, 1.0, VarType.BINARY)

    def fix(self, var: Var, value: float) -> None:
        var.lb = var.ub = float(value)

    # -- constraints ---------------------------------------------------
    def add_constr(self, constraint: Constraint, name: str | None = None) -> int:
        if not isinstance(constraint, Constraint):
            raise ModelError("add_constr expects a Constraint (use <=, >= or ==)")
        expr = constraint.expr
        if expr.model is not None and expr.model is not self:
            raise ModelError("constraint references variables of another model")
        items = sorted((k, v) for k, v in expr.terms.items() if v != 0.0)
        idx = len(self.rows)
        self.rows.append(Row(
            name=name or f"c{idx}",
            index=tuple(k for k, _ in items),
            value=tuple(v for _, v in items),
            sense=constraint.sense,
            rhs=-expr.const,
        ))
        return idx

    def add_row(self, index, value, sense: Sense, rhs: float, name: str | None = None) -> int:
        """Low-level row insertion for callers that already hold sparse data."""
        idx = len(self.rows)
        pairs = sorted((int(j), float(a)) for j, a in zip(index, value) if a != 0.0)
        self.rows.append(Row(name or f"c{idx}", tuple(j for j, _ in pairs), tuple(a for _, a in pairs),
                             Sense(sense), float(rhs)))
        return idx

    def set_rhs(self, row: int, rhs: float) -> None:
        self.rows[row].rhs = float(rhs)

    # -- objective -----------------------------------------------------
    def minimize(self, expr) -> None:
        self.objective = Objective(_as_expr(expr), maximize=False)

    def maximize(self, expr) -> None:
        self.objective = Objective(_as_expr(expr), maximize=True)

    # -- queries -------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self.vars)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def is_mip(self) -> bool:
        return any(v.is_integer for v in self.vars)

    def check(self) -> None:
        """Raise :class:`ModelError` if the model is malformed."""
        n = len(self.vars)
        for v in self.vars:
            if not v.lb <= v.ub:
                raise ModelError(f"variable {v.name}: lb {v.lb} > ub {v.ub}")
        for r in self.rows:
            if any(i < 0 or i >= n for i in r.index):
                raise ModelError(f"row {r.name} references an unknown variable")
            if not all(math.isfinite(a) for a in r.value) or math.isnan(r.rhs):
                raise ModelError(f"row {r.name} has non-finite data")
        if any(k >= n for k in self.objective.expr.terms):
            raise ModelError("objective references an unknown variable")

    def arrays(self) -> dict[str, np.ndarray]:
        """Dense bounds/costs plus the CSR constraint matrix."""
        n = len(self.vars)
        cost = np.zeros(n)
        for k, v in self.objective.expr.terms.items():
            cost[k] = v
        start = [0]
        index: list[int] = []
        value: list[float] = []
        lo = np.empty(len(self.rows))
        hi = np.empty(len(self.rows))
        for i, r in enumerate(self.rows):
            index.extend(r.index)
            value.extend(r.value)
            start.append(len(index))
            lo[i], hi[i] = r.bounds
        return {
            "cost": cost,
            "offset": np.float64(self.objective.expr.const),
            "col_lower": np.array([v.lb for v in self.vars], dtype=float),
            "col_upper": np.array([v.ub for v in self.vars], dtype=float),
            "integrality": np.array([1 if v.is_integer else 0 for v in self.vars], dtype=np.int8),
            "row_lower": lo,
            "row_upper": hi,
            "start": np.array(start, dtype=np.int64),
            "index": np.array(index, dtype=np.int64),
            "value": np.array(value, dtype=float),
        }

    def solve(self, params=None, backend: str | None = None):
        from .backends import solve

        return solve(self, params=params, backend=backend)


def _as_expr(expr) -> LinExpr:
    if isinstance(expr, LinExpr):
        return expr.copy()
    if isinstance(expr, Var):
        return expr.to_expr()
    if isinstance(expr, (int, float)):
        return LinExpr(const=float(expr))
    raise TypeError(f"cannot use {type(expr).__name__} as an objective")


def quicksum(items: Iterable) -> LinExpr:
    return LinExpr.sum(items)
