import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import textbook_simplex
from wildfire_cep.milp import (
    LinExpr,
    Model,
    ModelError,
    PersistentSolver,
    Sense,
    Status,
    UnsupportedFormat,
    available_backends,
    export_model,
    quicksum,
    solve,
    to_lp,
    to_mps,
)
from wildfire_cep.milp.export import read_and_solve

BACKENDS = available_backends()


@pytest.mark.parametrize("backend", BACKENDS)
def test_min_x_at_least_three(backend):
    m = Model()
    x = m.add_var("x", -math.inf)
    m.add_constr(x >= 3)
    m.minimize(x)
    res = solve(m, backend=backend)
    assert res.status is Status.OPTIMAL
    assert res.objective == pytest.approx(3.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_binary_knapsack(backend):
    m = Model()
    x, y = m.add_binary("x"), m.add_binary("y")
    m.add_constr(x + y <= 1)
    m.maximize(x + y)
    res = solve(m, backend=backend)
    assert res.optimal
    assert res.objective == pytest.approx(1.0)


def test_infeasible_and_unbounded():
    m = Model()
    x = m.add_var("x", 0.0, 1.0)
    m.add_constr(x >= 2)
    m.minimize(x)
    assert solve(m).status is Status.INFEASIBLE
    m = Model()
    x = m.add_var("x", -math.inf)
    m.minimize(x)
    assert solve(m).status in (Status.UNBOUNDED, Status.INFEASIBLE)


def test_expressions_and_model_mixing():
    m = Model()
    x, y = m.add_var("x"), m.add_var("y")
    e = 2 * x + y - 3 + x
    assert e.terms == {x.index: 3.0, y.index: 1.0}
    assert e.const == -3.0
    assert quicksum([x, y, 1.0]).const == 1.0
    other = Model()
    z = other.add_var("z")
    with pytest.raises(ModelError):
        m.add_constr(x + z >= 0)


def _random_lp(rng, n, m):
    A = np.round(rng.uniform(-1.0, 3.0, (m, n)), 3)
    b = np.round(rng.uniform(1.0, 10.0, m), 3)
    c = np.round(rng.uniform(-5.0, 2.0, n), 3)
    # a bounding row keeps every instance bounded
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, 20.0)
    return c, A, b


def _build(c, A, b):
    m = Model()
    xs = [m.add_var(f"x{i}") for i in range(len(c))]
    rows = [m.add_constr(LinExpr.sum(a * x for a, x in zip(row, xs)) <= bi) for row, bi in zip(A, b)]
    m.minimize(LinExpr.sum(ci * x for ci, x in zip(c, xs)))
    return m, xs, rows


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("seed", range(15))
def test_random_lp_matches_textbook_simplex(seed, backend):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(2, 21)), int(rng.integers(1, 12))
    c, A, b = _random_lp(rng, n, k)
    ref, _ = textbook_simplex(c, A, b)
    m, _, _ = _build(c, A, b)
    res = solve(m, backend=backend)
    assert res.optimal
    assert res.objective == pytest.approx(ref, abs=1e-8 * (1 + abs(ref)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_lp_strong_duality(seed):
    rng = np.random.default_rng(seed)
    c, A, b = _random_lp(rng, int(rng.integers(1, 10)), int(rng.integers(1, 8)))
    m, _, rows = _build(c, A, b)
    res = solve(m)
    assert res.optimal
    y = np.array([res.dual(r) for r in rows])
    # duals are d objective / d rhs; for <= rows in a minimisation they are <= 0
    assert np.all(y <= 1e-9)
    dual_obj = float(y @ b)
    assert abs(res.objective - dual_obj) <= 1e-6 * (1 + abs(res.objective))
    # primal feasibility within the default tolerance
    x = res.x
    assert np.all(A @ x <= b + 1e-6)


def test_persistent_solver_rhs_update():
    m = Model()
    x = m.add_var("x")
    r = m.add_constr(x >= 1)
    m.minimize(2 * x)
    solver = PersistentSolver(m)
    assert solver.solve().objective == pytest.approx(2.0)
    solver.set_rhs([r], [4.0])
    assert solver.solve().objective == pytest.approx(8.0)


def test_add_row_matches_add_constr():
    a, b = Model(), Model()
    for mm in (a, b):
        mm.add_var("x")
        mm.add_var("y")
    a.add_constr(a.vars[0] * 2 + a.vars[1] >= 1)
    b.add_row([1, 0, 1], [1.0, 2.0, 0.0], Sense.GE, 1.0)
    assert to_lp(a) == to_lp(b)


# -- export -------------------------------------------------------------------

def _two_var():
    m = Model("two")
    x, y = m.add_var("x", 0, 4), m.add_var("y", -1, 3)
    m.add_constr(x + 2 * y <= 5, "cap")
    m.add_constr(x - y >= -1, "link")
    m.maximize(3 * x + 2 * y)
    return m


def test_empty_model_exports(tmp_path):
    m = Model("empty")
    lp = export_model(m, tmp_path / "e.lp").read_text()
    assert "Subject To" in lp and lp.rstrip().endswith("End")
    mps = export_model(m, tmp_path / "e.mps").read_text()
    assert "ROWS" in mps and "COLUMNS" in mps and mps.rstrip().endswith("ENDATA")


@pytest.mark.parametrize("fmt", ["lp", "mps"])
def test_round_trip(tmp_path, fmt):
    m = _two_var()
    want = solve(m).objective
    path = export_model(m, tmp_path / f"two.{fmt}")
    status, got = read_and_solve(path)
    assert status == "Optimal"
    assert got == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("fmt", ["lp", "mps"])
def test_binary_section_and_mip_round_trip(tmp_path, fmt):
    m = Model("mip")
    x, y = m.add_binary("x"), m.add_var("y", 0, 10)
    m.add_constr(y - 10 * x <= 0)
    m.add_constr(y <= 6.5)
    m.maximize(y - 3 * x)
    path = export_model(m, tmp_path / f"m.{fmt}")
    text = path.read_text()
    assert ("Binary" in text or "Binaries" in text) if fmt == "lp" else "MARKER" in text
    _, got = read_and_solve(path)
    assert got == pytest.approx(solve(m).objective, abs=1e-9)


def test_export_is_byte_stable(tmp_path):
    assert to_lp(_two_var()) == to_lp(_two_var())
    assert to_mps(_two_var()) == to_mps(_two_var())
    p1 = export_model(_two_var(), tmp_path / "a.lp").read_bytes()
    p2 = export_model(_two_var(), tmp_path / "b.lp").read_bytes()
    assert p1 == p2


def test_unsupported_format(tmp_path):
    with pytest.raises(UnsupportedFormat):
        export_model(_two_var(), tmp_path / "x.json")
