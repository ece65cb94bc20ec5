import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from cdcpath.biclique import BicliqueCover
from cdcpath.formulation import (FootstepParams, InfeasibleGoal, InfeasibleStart, MipModel,
                                 NotIbRepresentable, big_m_values, big_m_waypoint,
                                 expected_assign_counts, footstep_model, ib_waypoint,
                                 reach_polygon, step_positions, trimmed_steps)
from cdcpath.geometry import Environment
from cdcpath.partition import FaceHalfspaces, Partition, all_halfspaces
from cdcpath.pipeline import prepare
from cdcpath.scenarios import gen_env
from cdcpath.solver import UnsupportedModel, solve_milp


def hs(rows):
    A = np.array([r[0] for r in rows], dtype=float)
    return FaceHalfspaces(A, np.array([r[1] for r in rows], dtype=float))


def test_big_m_values_examples():
    r = 1 / math.sqrt(2)
    M = big_m_values([hs([((2, -1), 0), ((-1, 0), 0), ((r, r), 0)])])[0]
    assert M[0] == pytest.approx(2.0)
    assert M[1] == pytest.approx(0.0)
    assert M[2] == pytest.approx(math.sqrt(2))


def test_big_m_waypoint_empty_square(empty_partition):
    m = big_m_waypoint(empty_partition)
    assert m.summary() == {"binaries": 2, "continuous": 0, "inequalities": 6, "equalities": 1}


def test_big_m_fixing_z_recovers_face(annulus_partition):
    p = annulus_partition
    m = big_m_waypoint(p)
    hsp = all_halfspaces(p)
    for i in range(p.d):
        rows = [r for r in m.rows if r.name.startswith(f"bm_{i + 1}_")]
        assert len(rows) == len(hsp[i])
        zi = m.index(f"z_{i + 1}")
        for r, (a, b) in zip(rows, hsp[i].rows):
            # substitute z_i = 1: a.x <= b
            assert r.coefs.get(m.index("x"), 0.0) == pytest.approx(a[0])
            assert r.coefs.get(m.index("y"), 0.0) == pytest.approx(a[1])
            assert r.rhs - r.coefs.get(zi, 0.0) == pytest.approx(b)


def test_big_m_relaxation_contains_every_vertex():
    for seed in range(5):
        p = prepare(gen_env(seed, 3)).partition
        H = all_halfspaces(p)
        Ms = big_m_values(H)
        for h, M in zip(H, Ms):
            for v in range(1, p.n + 1):
                assert (h.A @ np.asarray(p.point(v)) <= M + 1e-12).all()


def test_ib_waypoint_counts(annulus_partition):
    p = annulus_partition
    art_cover = prepare(Environment(obstacles=[[(0.4, 0.4), (0.6, 0.4), (0.6, 0.6), (0.4, 0.6)]])).cover_merged
    m = ib_waypoint(p, art_cover)
    t = art_cover.depth
    assert m.summary() == {"binaries": t, "continuous": p.n, "inequalities": 2 * t, "equalities": 3}
    for v in m.vars:
        if v.name.startswith("lam"):
            assert (v.lb, v.ub) == (0.0, 1.0)


def test_ib_waypoint_empty_cover_is_convex_hull(empty_partition):
    m = ib_waypoint(empty_partition, BicliqueCover([]))
    assert m.summary()["binaries"] == 0
    m.obj = {m.index("x"): -1.0, m.index("y"): -1.0}
    res = solve_milp(m)
    assert res.objective == pytest.approx(-2.0)


def _fixed_point_feasible(model, q):
    m = model
    for name, val in zip(("x", "y"), q):
        v = m.var(name)
        v.lb = v.ub = float(val)
    return solve_milp(m).status == "optimal"


def test_fragments_describe_free_space():
    rng = np.random.default_rng(3)
    for seed in (0, 2):
        env = gen_env(seed, 2)
        art = prepare(env)
        if art.cover_merged is None:
            continue
        for q in rng.random((25, 2)):
            q = tuple(np.round(q, 3))
            expect = env.free_point(q)
            assert _fixed_point_feasible(big_m_waypoint(art.partition), q) == expect
            assert _fixed_point_feasible(ib_waypoint(art.partition, art.cover_merged), q) == expect


def test_reach_polygon_is_inscribed_and_symmetric():
    prm = FootstepParams()
    normals, r = reach_polygon(prm)
    assert len(normals) == 16
    # vertices of the polygon lie on the max-step circle
    for k in range(16):
        th = 2 * math.pi * k / 16
        vtx = prm.max_step * np.array([math.cos(th), math.sin(th)])
        assert (normals @ vtx <= r + 1e-12).all()
        assert np.linalg.norm(vtx) == pytest.approx(prm.max_step)
    # invariant under rotation by the heading step
    rot = np.array([[math.cos(math.pi / 8), -math.sin(math.pi / 8)],
                    [math.sin(math.pi / 8), math.cos(math.pi / 8)]])
    rotated = normals @ rot.T
    for n in rotated:
        assert np.min(np.linalg.norm(normals - n, axis=1)) < 1e-12


def test_single_step_at_goal_costs_nothing(empty_env, empty_partition):
    prm = FootstepParams(n_steps=1, method="bigm", start=(0.3, 0.3, 0.0), goal=(0.3, 0.3, 0.0))
    res = solve_milp(footstep_model(empty_env, empty_partition, prm))
    assert res.status == "optimal" and res.objective == pytest.approx(0.0, abs=1e-9)


def l1_path_oracle(p, start, goal, n_steps, w_goal=10.0):
    """Enumerate face assignments of the free steps and solve each LP independently."""
    H = all_halfspaces(p)
    best = np.inf
    free = n_steps - 1
    for faces in itertools.product(range(p.d), repeat=free):
        # variables: p_2..p_N (2 each), step abs (2 per step), goal abs (2)
        nv = 2 * free + 2 * free + 2
        c = np.zeros(nv)
        c[2 * free:4 * free] = 1.0
        c[4 * free:] = w_goal
        A, b = [], []

        def pos(s):  # s = 1..N, returns (coef dict) for x, y
            return None if s == 1 else (2 * (s - 2), 2 * (s - 2) + 1)

        for s in range(1, n_steps):
            for ax in range(2):
                for sign in (1, -1):
                    row = np.zeros(nv)
                    rhs = 0.0
                    nxt = pos(s + 1)
                    row[nxt[ax]] += sign
                    cur = pos(s)
                    if cur is None:
                        rhs += sign * start[ax]
                    else:
                        row[cur[ax]] -= sign
                    row[2 * free + 2 * (s - 1) + ax] = -1.0
                    A.append(row)
                    b.append(rhs)
        last = pos(n_steps)
        for ax in range(2):
            for sign in (1, -1):
                row = np.zeros(nv)
                row[last[ax]] = sign
                row[4 * free + ax] = -1.0
                A.append(row)
                b.append(sign * goal[ax])
        for s, f in enumerate(faces, start=2):
            for a, bb in H[f].rows:
                row = np.zeros(nv)
                row[pos(s)[0]], row[pos(s)[1]] = a
                A.append(row)
                b.append(bb)
        res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=[(0, 1)] * (4 * free) + [(0, None)] * 2,
                      method="highs")
        if res.status == 0:
            best = min(best, res.fun)
    return best


def test_empty_square_l1_path(empty_env, empty_partition):
    start, goal = (0.1, 0.1), (0.9, 0.9)
    oracle = l1_path_oracle(empty_partition, start, goal, 4)
    assert oracle == pytest.approx(1.6)
    from cdcpath.pipeline import prepare as prep
    art = prep(empty_env)
    for method, cover in (("bigm", None), ("ib", art.cover_merged)):
        prm = FootstepParams(n_steps=4, method=method, start=(*start, math.pi / 4),
                             goal=(*goal, math.pi / 4), max_step=1.0, lateral_offset=0.0, w_used=0.0)
        res = solve_milp(footstep_model(empty_env, empty_partition, prm, cover=cover))
        assert res.status == "optimal"
        assert res.objective == pytest.approx(oracle, abs=1e-6)


def test_trimming_parks_steps_on_goal(empty_env, empty_partition):
    prm = FootstepParams(n_steps=8, method="bigm", start=(0.1, 0.1, math.pi / 4),
                         goal=(0.3, 0.3, math.pi / 4), w_used=0.05)
    m = footstep_model(empty_env, empty_partition, prm)
    res = solve_milp(m)
    assert res.status == "optimal"
    k = trimmed_steps(m, res.x, 8)
    assert 0 < k < 7
    steps = step_positions(m, res.x, 8)
    for q in steps[8 - k:]:
        assert np.allclose(q, (0.3, 0.3), atol=1e-7)


def test_start_and_goal_must_be_free(annulus_env, annulus_partition):
    with pytest.raises(InfeasibleStart):
        footstep_model(annulus_env, annulus_partition,
                       FootstepParams(method="bigm", start=(0.5, 0.5, 0.0)))
    with pytest.raises(InfeasibleGoal):
        footstep_model(annulus_env, annulus_partition,
                       FootstepParams(method="bigm", goal=(0.5, 0.5, 0.0)))


def test_ib_requires_representable_partition():
    p = Partition([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(1, 2), (2, 3), (1, 3)])
    env = Environment(obstacles=[])
    with pytest.raises(NotIbRepresentable):
        footstep_model(env, p, FootstepParams(method="ib", start=(0.0, 0.0, 0.0), goal=(1.0, 0.0, 0.0)),
                       cover=BicliqueCover([]))


@pytest.mark.parametrize("method", ["ib", "ib-orig", "bigm"])
def test_count_formulas(method):
    for seed in range(4):
        art = prepare(gen_env(seed, 1 + seed % 3))
        if art.cover_merged is None:
            continue
        cover = art.cover_merged if method == "ib" else art.cover_original
        m = footstep_model(art.env, art.partition, FootstepParams(n_steps=5, method=method), cover=cover)
        assert m.summary("assign") == expected_assign_counts(method, 5, art.partition, cover)
        trims = [v for v in m.vars if v.group == "trim"]
        assert len(trims) == 4


def test_quadratic_objective_is_export_only(empty_env, empty_partition):
    prm = FootstepParams(n_steps=3, method="bigm", objective="quadratic")
    m = footstep_model(empty_env, empty_partition, prm)
    assert m.quad
    x = np.zeros(len(m.vars))
    x[m.index("x1")], x[m.index("y1")] = 0.05, 0.05
    x[m.index("x3")], x[m.index("y3")] = 0.5, 0.5
    # steps 1 -> 2 -> 3 with step 2 at origin, nothing trimmed
    expect = (0.05 ** 2 * 2) + (0.5 ** 2 * 2) + 10 * 2 * 0.45 ** 2 + prm.w_used * 2
    assert m.objective_value(x) == pytest.approx(expect)
    with pytest.raises(UnsupportedModel):
        solve_milp(m)


def test_model_rejects_bad_input():
    m = MipModel()
    m.add_var("a")
    with pytest.raises(ValueError):
        m.add_var("a")
    with pytest.raises(ValueError):
        m.add_var("b", -math.inf, 1)
    with pytest.raises(IndexError):
        m.add_row({5: 1.0}, "<=", 1)
