import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from cdcpath.formulation import FootstepParams, MipModel, footstep_model, ib_waypoint
from cdcpath.pipeline import prepare
from cdcpath.scenarios import gen_env
from cdcpath.solver import INT_TOL, UnsupportedModel, solve_lp, solve_milp


def one_var(rows, vtype="C"):
    m = MipModel()
    k = m.add_var("x", 0.0, 1.0, vtype)
    for coef, sense, rhs in rows:
        m.add_row({k: coef}, sense, rhs)
    return m, k


def test_lp_examples():
    m, k = one_var([(1.0, ">=", 0.3)])
    m.obj = {k: 1.0}
    sol = solve_lp(m)
    assert sol.status == "optimal" and sol.objective == pytest.approx(0.3)
    m, _ = one_var([(1.0, "<=", 0.0), (1.0, ">=", 1.0)])
    assert solve_lp(m).status == "infeasible"


def test_milp_example():
    m, k = one_var([(2.0, "<=", 1.0)], "B")
    m.obj = {k: -1.0}
    res = solve_milp(m)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(0.0) and res.x[k] == 0.0


def test_maximize_sense():
    m, k = one_var([(1.0, "<=", 0.7)])
    m.obj, m.sense = {k: 1.0}, "max"
    assert solve_lp(m).objective == pytest.approx(0.7)
    assert solve_milp(m).objective == pytest.approx(0.7)


def test_quadratic_rejected():
    m, k = one_var([])
    m.quad = {(k, k): 1.0}
    with pytest.raises(UnsupportedModel):
        solve_milp(m)


def random_model(rng, n, m_rows, binary_frac=0.0):
    model = MipModel()
    for j in range(n):
        vt = "B" if rng.random() < binary_frac else "C"
        model.add_var(f"v{j}", 0.0, 1.0 if vt == "B" else float(rng.integers(1, 4)), vt)
    x0 = np.array([rng.random() * v.ub for v in model.vars])
    for i in range(m_rows):
        a = np.round(rng.normal(size=n), 2)
        sense = ("<=", ">=", "=")[rng.integers(0, 3)] if i % 4 else "<="
        slack = 0.0 if sense == "=" else rng.random()
        rhs = a @ x0 + (slack if sense == "<=" else -slack)
        model.add_row({j: a[j] for j in range(n)}, sense, round(rhs, 3) if sense != "=" else rhs)
    model.obj = {j: float(c) for j, c in enumerate(np.round(rng.normal(size=n), 2))}
    return model


def scipy_lp(model):
    c, Aub, bub, Aeq, beq, lb, ub, _ = model.to_arrays()
    return linprog(c, A_ub=Aub if len(bub) else None, b_ub=bub if len(bub) else None,
                   A_eq=Aeq if len(beq) else None, b_eq=beq if len(beq) else None,
                   bounds=list(zip(lb, ub)), method="highs")


def test_lp_matches_scipy_and_certificates():
    rng = np.random.default_rng(11)
    for _ in range(60):
        model = random_model(rng, int(rng.integers(2, 9)), int(rng.integers(1, 8)))
        ref = scipy_lp(model)
        sol = solve_lp(model)
        if ref.status == 2:
            assert sol.status == "infeasible"
            continue
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(ref.fun, abs=1e-7)
        assert model.max_violation(sol.x, integrality=False) <= 1e-7
        # complementary slackness on rows
        for r, y in zip(model.rows, sol.duals):
            act = sum(a * sol.x[k] for k, a in r.coefs.items())
            assert abs(y * (act - r.rhs)) <= 1e-6
        # reduced costs agree with c - A^T y
        c, *_ = model.to_arrays()
        At_y = np.zeros(len(model.vars))
        for r, y in zip(model.rows, sol.duals):
            for k, a in r.coefs.items():
                At_y[k] += a * y
        assert np.allclose(sol.reduced_costs, c - At_y, atol=1e-6)


def test_milp_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(40):
        model = random_model(rng, int(rng.integers(3, 9)), int(rng.integers(1, 6)), 0.6)
        c, Aub, bub, Aeq, beq, lb, ub, isbin = model.to_arrays()
        cons = []
        if len(bub):
            cons.append(LinearConstraint(Aub, -np.inf, bub))
        if len(beq):
            cons.append(LinearConstraint(Aeq, beq, beq))
        ref = milp(c, constraints=cons, integrality=isbin.astype(int), bounds=Bounds(lb, ub))
        res = solve_milp(model)
        if ref.status == 2:
            assert res.status == "infeasible"
            continue
        assert res.status == "optimal"
        assert res.objective == pytest.approx(ref.fun, abs=1e-6)
        assert model.max_violation(res.x) <= INT_TOL
        assert np.diff(res.bound_history).min(initial=0.0) >= -1e-9


def test_node_limit_and_determinism():
    art = prepare(gen_env(2, 2))
    m = footstep_model(art.env, art.partition, FootstepParams(n_steps=10, method="bigm"))
    a = solve_milp(m, node_limit=5)
    b = solve_milp(m, node_limit=5)
    assert a.status == "node-limit" and a.nodes == 5
    assert (a.objective == b.objective or (np.isnan(a.objective) and np.isnan(b.objective)))
    assert a.bound == b.bound
    if a.x is not None:
        assert a.gap >= 0.0 and a.bound <= a.objective + 1e-9


def test_ideal_fragment_needs_one_node():
    rng = np.random.default_rng(0)
    art = prepare(gen_env(0, 1))
    for _ in range(5):
        m = ib_waypoint(art.partition, art.cover_merged)
        m.obj = {k: float(rng.normal()) for k, v in enumerate(m.vars) if v.name.startswith("lam")}
        res = solve_milp(m)
        assert res.status == "optimal" and res.nodes == 1


def test_json_output():
    m, k = one_var([(1.0, ">=", 0.25)])
    m.obj = {k: 2.0}
    out = solve_milp(m).to_json(m)
    assert out["status"] == "optimal"
    assert out["objective"] == pytest.approx(0.5)
    assert out["values"] == {"x": 0.25}
