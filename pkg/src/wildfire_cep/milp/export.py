"""Write models as CPLEX-LP or free-MPS text.

Output depends only on the model's insertion order, so building the same
model twice yields byte-identical files. Names are sanitised to the
character set both formats accept and de-duplicated with a numeric suffix.
"""

from __future__ import annotations

import math
import os
import re
from pathlib import Path

from .model import Model, Sense, VarType

FORMATS = ("lp", "mps")

_BAD = re.compile(r"[^A-Za-z0-9_.]")


class UnsupportedFormat(ValueError):
    pass


def _names(raw: list[str], prefix: str, reserved: tuple[str, ...] = ()) -> list[str]:
    out, seen = [], set(reserved)
    for i, name in enumerate(raw):
        clean = _BAD.sub("_", name) or f"{prefix}{i}"
        if clean[0].isdigit() or clean[0] in ".eE":
            clean = f"{prefix}_{clean}"
        base, k = clean, 1
        while clean in seen:
            clean = f"{base}_{k}"
            k += 1
        seen.add(clean)
        out.append(clean)
    return out


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def to_lp(model: Model) -> str:
    cols = _names([v.name for v in model.vars], "x")
    rows = _names([r.name for r in model.rows], "c", reserved=("obj",))
    obj = model.objective
    lines = [f"\\ model {model.name}", "Maximize" if obj.maximize else "Minimize"]

    def terms(pairs) -> str:
        parts = []
        for j, a in pairs:
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {_num(abs(a))} {cols[j]}")
        return " ".join(parts)

    body = terms(sorted(obj.expr.terms.items()))
    if obj.expr.const:
        body = (body + " " if body else "") + f"{'-' if obj.expr.const < 0 else '+'} {_num(abs(obj.expr.const))}"
    lines.append(f" obj: {body}".rstrip())
    lines.append("Subject To")
    op = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}
    for name, r in zip(rows, model.rows):
        lhs = terms(zip(r.index, r.value)) or (f"0 {cols[0]}" if model.vars else "0")
        lines.append(f" {name}: {lhs} {op[r.sense]} {_num(r.rhs)}")
    lines.append("Bounds")
    for name, v in zip(cols, model.vars):
        if v.vtype is VarType.BINARY and v.lb == 0.0 and v.ub == 1.0:
            continue
        if math.isinf(v.lb) and math.isinf(v.ub):
            lines.append(f" {name} free")
        elif v.lb == v.ub:
            lines.append(f" {name} = {_num(v.lb)}")
        else:
            lines.append(f" {_num(v.lb)} <= {name} <= {_num(v.ub)}")
    binaries = [n for n, v in zip(cols, model.vars) if v.vtype is VarType.BINARY]
    generals = [n for n, v in zip(cols, model.vars) if v.vtype is VarType.INTEGER]
    lines.append("Binaries")
    lines.extend(f" {n}" for n in binaries)
    lines.append("Generals")
    lines.extend(f" {n}" for n in generals)
    lines.append("End")
    return "\n".join(lines) + "\n"


def to_mps(model: Model) -> str:
    cols = _names([v.name for v in model.vars], "x")
    rows = _names([r.name for r in model.rows], "c", reserved=("obj",))
    obj = model.objective
    out = [f"NAME {_BAD.sub('_', model.name) or 'model'}"]
    if obj.maximize:
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out.append(" N  obj")
    kind = {Sense.LE: "L", Sense.GE: "G", Sense.EQ: "E"}
    for name, r in zip(rows, model.rows):
        out.append(f" {kind[r.sense]}  {name}")
    # column-major view of the row data
    by_col: list[list[tuple[int, float]]] = [[] for _ in model.vars]
    for i, r in enumerate(model.rows):
        for j, a in zip(r.index, r.value):
            by_col[j].append((i, a))
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, (name, v) in enumerate(zip(cols, model.vars)):
        if v.is_integer and not in_int:
            out.append(f"    MARKER{marker} 'MARKER' 'INTORG'")
            in_int = True
        elif not v.is_integer and in_int:
            out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1
            in_int = False
        c = obj.expr.terms.get(j, 0.0)
        entries = ([("obj", c)] if c else []) + [(rows[i], a) for i, a in by_col[j]]
        if not entries:
            entries = [("obj", 0.0)]
        for rname, a in entries:
            out.append(f"    {name} {rname} {_num(a)}")
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if obj.expr.const:
        out.append(f"    RHS obj {_num(-obj.expr.const)}")
    for name, r in zip(rows, model.rows):
        if r.rhs:
            out.append(f"    RHS {name} {_num(r.rhs)}")
    out.append("BOUNDS")
    for name, v in zip(cols, model.vars):
        if v.vtype is VarType.BINARY and v.lb == 0.0 and v.ub == 1.0:
            out.append(f" BV BND {name}")
            continue
        if math.isinf(v.lb) and math.isinf(v.ub):
            out.append(f" FR BND {name}")
            continue
        if v.lb == v.ub:
            out.append(f" FX BND {name} {_num(v.lb)}")
            continue
        if math.isinf(v.lb):
            out.append(f" MI BND {name}")
        elif v.lb != 0.0 or v.is_integer:
            out.append(f" LO BND {name} {_num(v.lb)}")
        if math.isinf(v.ub):
            if v.is_integer:
                out.append(f" PL BND {name}")
        else:
            out.append(f" UP BND {name} {_num(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_model(model: Model, path: str | os.PathLike, fmt: str | None = None) -> Path:
    """Write ``model`` to ``path``; the format defaults to the file suffix."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in FORMATS:
        raise UnsupportedFormat(f"unsupported model format {fmt!r}; expected one of {FORMATS}")
    model.check()
    text = to_lp(model) if fmt == "lp" else to_mps(model)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def read_and_solve(path: str | os.PathLike) -> tuple[str, float]:
    """Load a model file with the HiGHS reader and solve it.

    Returns the model status string and objective value; used to check
    that exported files round-trip.
    """
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 1e-9)
    status = h.readModel(str(path))
    if status != highspy.HighsStatus.kOk:
        raise ValueError(f"HiGHS could not read {path}")
    h.run()
    return h.modelStatusToString(h.getModelStatus()), float(h.getInfo().objective_function_value)
