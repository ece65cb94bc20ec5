"""MIP models: big-M and independent-branching footstep assignment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cdc import is_pairwise_ib_representable
from .partition import Partition, all_halfspaces


class InfeasibleStart(ValueError):
    pass


class InfeasibleGoal(ValueError):
    pass


class NotIbRepresentable(ValueError):
    pass


@dataclass
class Var:
    name: str
    lb: float
    ub: float
    vtype: str = "C"  # C or B
    group: str = ""


@dataclass
class Row:
    coefs: dict  # var index -> coefficient
    sense: str   # <=, =, >=
    rhs: float
    name: str = ""
    group: str = ""


@dataclass
class MipModel:
    name: str = "model"
    vars: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    obj: dict = field(default_factory=dict)
    obj_const: float = 0.0
    quad: dict = field(default_factory=dict)  # (i, j) with i <= j -> coefficient of x_i x_j
    sense: str = "min"

    def __post_init__(self):
        self._index = {v.name: k for k, v in enumerate(self.vars)}

    # building --------------------------------------------------------------
    def add_var(self, name, lb=0.0, ub=1.0, vtype="C", group="") -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name}")
        if not math.isfinite(lb) or math.isnan(ub) or lb > ub:
            raise ValueError(f"variable {name} needs a finite lower bound and lb <= ub")
        self._index[name] = len(self.vars)
        self.vars.append(Var(name, float(lb), float(ub), vtype, group))
        return len(self.vars) - 1

    def add_binary(self, name, group="") -> int:
        return self.add_var(name, 0.0, 1.0, "B", group)

    def add_row(self, coefs, sense, rhs, name="", group="") -> int:
        if sense not in ("<=", "=", ">="):
            raise ValueError(sense)
        clean = {}
        for k, a in coefs.items():
            if not 0 <= k < len(self.vars):
                raise IndexError(f"row references unknown variable {k}")
            if a != 0.0:
                clean[k] = clean.get(k, 0.0) + float(a)
        self.rows.append(Row(clean, sense, float(rhs), name or f"r{len(self.rows)}", group))
        return len(self.rows) - 1

    def index(self, name) -> int:
        return self._index[name]

    def var(self, name) -> Var:
        return self.vars[self._index[name]]

    # inspection ------------------------------------------------------------
    @property
    def binaries(self) -> list:
        return [k for k, v in enumerate(self.vars) if v.vtype == "B"]

    def summary(self, group: str | None = "assign") -> dict:
        vs = [v for v in self.vars if group is None or v.group == group]
        rs = [r for r in self.rows if group is None or r.group == group]
        return {
            "binaries": sum(v.vtype == "B" for v in vs),
            "continuous": sum(v.vtype == "C" for v in vs),
            "inequalities": sum(r.sense != "=" for r in rs),
            "equalities": sum(r.sense == "=" for r in rs),
        }

    def to_arrays(self):
        """Dense (c, A_ub, b_ub, A_eq, b_eq, lb, ub, is_binary); >= rows are negated."""
        n = len(self.vars)
        c = np.zeros(n)
        for k, a in self.obj.items():
            c[k] = a
        ub_rows, eq_rows = [], []
        for r in self.rows:
            (eq_rows if r.sense == "=" else ub_rows).append(r)
        A_ub = np.zeros((len(ub_rows), n))
        b_ub = np.zeros(len(ub_rows))
        for i, r in enumerate(ub_rows):
            s = -1.0 if r.sense == ">=" else 1.0
            for k, a in r.coefs.items():
                A_ub[i, k] = s * a
            b_ub[i] = s * r.rhs
        A_eq = np.zeros((len(eq_rows), n))
        b_eq = np.zeros(len(eq_rows))
        for i, r in enumerate(eq_rows):
            for k, a in r.coefs.items():
                A_eq[i, k] = a
            b_eq[i] = r.rhs
        lb = np.array([v.lb for v in self.vars])
        ub = np.array([v.ub for v in self.vars])
        isbin = np.array([v.vtype == "B" for v in self.vars])
        return c, A_ub, b_ub, A_eq, b_eq, lb, ub, isbin

    def objective_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        val = self.obj_const + sum(a * x[k] for k, a in self.obj.items())
        val += sum(q * x[i] * x[j] for (i, j), q in self.quad.items())
        return float(val)

    def max_violation(self, x, integrality: bool = True) -> float:
        """Largest bound, row or integrality violation of x (row-by-row, no matrices)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        for k, v in enumerate(self.vars):
            worst = max(worst, v.lb - x[k], x[k] - v.ub)
            if integrality and v.vtype == "B":
                worst = max(worst, abs(x[k] - round(x[k])))
        for r in self.rows:
            lhs = sum(a * x[k] for k, a in r.coefs.items())
            if r.sense == "<=":
                worst = max(worst, lhs - r.rhs)
            elif r.sense == ">=":
                worst = max(worst, r.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - r.rhs))
        return float(worst)

    def values(self, x) -> dict:
        return {v.name: float(x[k]) for k, v in enumerate(self.vars)}


# ---------------------------------------------------------------------------
# fragments
# ---------------------------------------------------------------------------

def big_m_values(halfspaces, box=((0.0, 0.0), (1.0, 1.0))) -> list:
    """Per face, M_k = max over the box of row k (sum of coordinatewise maxima)."""
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    return [np.maximum(h.A * lo, h.A * hi).sum(axis=1) for h in halfspaces]


def add_big_m(model: MipModel, p: Partition, halfspaces, M, xi: int, yi: int, tag: str) -> list:
    z = [model.add_binary(f"z{tag}_{i + 1}", "assign") for i in range(p.d)]
    for i, (h, m) in enumerate(zip(halfspaces, M)):
        for k in range(len(h)):
            a = h.A[k]
            # a.x <= b z + M (1 - z)
            model.add_row({xi: a[0], yi: a[1], z[i]: -(h.b[k] - m[k])}, "<=", m[k],
                          f"bm{tag}_{i + 1}_{k + 1}", "assign")
    model.add_row({zi: 1.0 for zi in z}, "=", 1.0, f"one{tag}", "assign")
    return z


def add_ib(model: MipModel, p: Partition, cover, xi: int, yi: int, tag: str) -> tuple:
    lam = [model.add_var(f"lam{tag}_{v}", 0.0, 1.0, "C", "assign") for v in range(1, p.n + 1)]
    z = [model.add_binary(f"z{tag}_{j + 1}", "assign") for j in range(cover.depth)]
    model.add_row({l: 1.0 for l in lam}, "=", 1.0, f"simplex{tag}", "assign")
    for j, (A, B) in enumerate(cover.levels):
        row = {lam[v - 1]: 1.0 for v in A}
        row[z[j]] = -1.0
        model.add_row(row, "<=", 0.0, f"ibA{tag}_{j + 1}", "assign")
        row = {lam[v - 1]: 1.0 for v in B}
        row[z[j]] = 1.0
        model.add_row(row, "<=", 1.0, f"ibB{tag}_{j + 1}", "assign")
    for axis, xv in ((0, xi), (1, yi)):
        row = {lam[v - 1]: -float(p.point(v)[axis]) for v in range(1, p.n + 1)}
        row[xv] = 1.0
        model.add_row(row, "=", 0.0, f"link{'xy'[axis]}{tag}", "assign")
    return lam, z


def _point_vars(model, box, tag=""):
    (x0, y0), (x1, y1) = box
    return (model.add_var(f"x{tag}", x0, x1, "C", "pose"),
            model.add_var(f"y{tag}", y0, y1, "C", "pose"))


def big_m_waypoint(p: Partition, M=None, box=((0.0, 0.0), (1.0, 1.0))) -> MipModel:
    """Standalone single-waypoint big-M model (zero objective)."""
    hs = all_halfspaces(p)
    if M is None:
        M = big_m_values(hs, box)
    m = MipModel("bigm_waypoint")
    xi, yi = _point_vars(m, box)
    add_big_m(m, p, hs, M, xi, yi, "")
    return m


def ib_waypoint(p: Partition, cover, box=((0.0, 0.0), (1.0, 1.0))) -> MipModel:
    """Standalone single-waypoint independent-branching model (zero objective)."""
    m = MipModel("ib_waypoint")
    xi, yi = _point_vars(m, box)
    add_ib(m, p, cover, xi, yi, "")
    return m


# ---------------------------------------------------------------------------
# footstep planning
# ---------------------------------------------------------------------------

@dataclass
class FootstepParams:
    n_steps: int = 25
    method: str = "ib"              # ib | ib-orig | bigm
    objective: str = "l1"           # l1 | quadratic
    dtheta_max: float = math.pi / 8
    headings: tuple = (0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8)
    max_step: float = 0.15
    lateral_offset: float = 0.1
    reach_sides: int = 16
    start: tuple = (0.05, 0.05, math.pi / 4)
    goal: tuple = (0.95, 0.95, math.pi / 4)
    w_goal: float = 10.0
    w_step: float = 1.0
    w_used: float = 0.01


def reach_polygon(params: FootstepParams):
    """Outward normals and offsets of a regular polygon inscribed in the step circle."""
    k = params.reach_sides
    ang = (2 * np.arange(k) + 1) * math.pi / k
    normals = np.column_stack([np.cos(ang), np.sin(ang)])
    return normals, params.max_step * math.cos(math.pi / k)


def _rot(theta, v):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def footstep_model(env, p: Partition, params: FootstepParams, cover=None, M=None) -> MipModel:
    """N-step plan: step 1 fixed at the start pose, trailing steps may be trimmed to the goal.

    Step s+1 minus step s must lie in the reach polygon centred on the lateral
    foot offset, rotated by the heading of step s.  Headings come from a fixed
    finite set (one binary each); the reach polygon is symmetric under those
    rotations so only the offset rotates, which keeps everything linear.
    """
    N = params.n_steps
    if N < 1:
        raise ValueError("n_steps must be >= 1")
    if p.locate(params.start[:2]) < 0:
        raise InfeasibleStart(f"start {params.start[:2]} is not in free space")
    if p.locate(params.goal[:2]) < 0:
        raise InfeasibleGoal(f"goal {params.goal[:2]} is not in free space")
    method = params.method
    if method not in ("ib", "ib-orig", "bigm"):
        raise ValueError(f"unknown method {method}")
    if method != "bigm":
        if cover is None:
            raise ValueError("independent-branching methods need a biclique cover")
        ok, witness = is_pairwise_ib_representable(p.cdc())
        if not ok:
            raise NotIbRepresentable(f"minimal infeasible triple {witness}")

    box = env.bounds
    (bx0, by0), (bx1, by1) = box
    W, H = bx1 - bx0, by1 - by0
    m = MipModel(f"footstep_{method}_{params.objective}")
    hs = all_halfspaces(p) if method == "bigm" else None
    if method == "bigm" and M is None:
        M = big_m_values(hs, box)

    pos = []
    for s in range(1, N + 1):
        xi, yi = _point_vars(m, box, str(s))
        pos.append((xi, yi))
        if method == "bigm":
            add_big_m(m, p, hs, M, xi, yi, str(s))
        else:
            add_ib(m, p, cover, xi, yi, str(s))
    sx, sy, st = params.start
    gx, gy, _ = params.goal
    for k, val in ((pos[0][0], sx), (pos[0][1], sy)):
        m.vars[k].lb = m.vars[k].ub = float(val)

    # headings
    th = np.asarray(params.headings, dtype=float)
    h = []
    for s in range(1, N + 1):
        hv = [m.add_binary(f"h{s}_{q + 1}", "heading") for q in range(len(th))]
        h.append(hv)
        m.add_row({v: 1.0 for v in hv}, "=", 1.0, f"head{s}", "heading")
    q0 = int(np.argmin(np.abs(np.angle(np.exp(1j * (th - st))))))
    for q, v in enumerate(h[0]):
        m.vars[v].lb = m.vars[v].ub = 1.0 if q == q0 else 0.0
    for s in range(N - 1):
        row = {}
        for q in range(len(th)):
            row[h[s + 1][q]] = row.get(h[s + 1][q], 0.0) + th[q]
            row[h[s][q]] = row.get(h[s][q], 0.0) - th[q]
        m.add_row(row, "<=", params.dtheta_max, f"dth{s + 1}u", "heading")
        m.add_row(row, ">=", -params.dtheta_max, f"dth{s + 1}l", "heading")

    # reachability, feet alternate starting with the left foot
    normals, r_in = reach_polygon(params)
    for s in range(N - 1):
        lateral = -params.lateral_offset if (s + 2) % 2 == 0 else params.lateral_offset
        (x0, y0), (x1, y1) = pos[s], pos[s + 1]
        offs = [_rot(t, (0.0, lateral)) for t in th]
        for k, nrm in enumerate(normals):
            row = {x1: nrm[0], y1: nrm[1], x0: -nrm[0], y0: -nrm[1]}
            for q in range(len(th)):
                row[h[s][q]] = -float(nrm @ offs[q])
            m.add_row(row, "<=", r_in, f"reach{s + 2}_{k + 1}", "reach")

    # trimming: u_s = 1 parks step s on the goal; trimmed steps form a suffix
    u = [None] + [m.add_binary(f"u{s}", "trim") for s in range(2, N + 1)]
    for s in range(1, N):
        if s + 1 < N:
            m.add_row({u[s]: 1.0, u[s + 1]: -1.0}, "<=", 0.0, f"suffix{s + 1}", "trim")
        xi, yi = pos[s]
        m.add_row({xi: 1.0, u[s]: W}, "<=", gx + W, f"trimx{s + 1}u", "trim")
        m.add_row({xi: -1.0, u[s]: W}, "<=", -gx + W, f"trimx{s + 1}l", "trim")
        m.add_row({yi: 1.0, u[s]: H}, "<=", gy + H, f"trimy{s + 1}u", "trim")
        m.add_row({yi: -1.0, u[s]: H}, "<=", -gy + H, f"trimy{s + 1}l", "trim")

    # objective
    m.obj_const = params.w_used * (N - 1)
    for s in range(1, N):
        m.obj[u[s]] = m.obj.get(u[s], 0.0) - params.w_used
    xN, yN = pos[-1]
    if params.objective == "l1":
        for s in range(N - 1):
            (x0, y0), (x1, y1) = pos[s], pos[s + 1]
            ax = m.add_var(f"ax{s + 1}", 0.0, W, "C", "cost")
            ay = m.add_var(f"ay{s + 1}", 0.0, H, "C", "cost")
            for sign in (1.0, -1.0):
                m.add_row({x1: sign, x0: -sign, ax: -1.0}, "<=", 0.0, group="cost")
                m.add_row({y1: sign, y0: -sign, ay: -1.0}, "<=", 0.0, group="cost")
            m.obj[ax] = params.w_step
            m.obj[ay] = params.w_step
        ex = m.add_var("gx", 0.0, W, "C", "cost")
        ey = m.add_var("gy", 0.0, H, "C", "cost")
        for sign in (1.0, -1.0):
            m.add_row({xN: sign, ex: -1.0}, "<=", sign * gx, group="cost")
            m.add_row({yN: sign, ey: -1.0}, "<=", sign * gy, group="cost")
        m.obj[ex] = params.w_goal
        m.obj[ey] = params.w_goal
    elif params.objective == "quadratic":
        def addq(i, j, q):
            key = (min(i, j), max(i, j))
            m.quad[key] = m.quad.get(key, 0.0) + q
        for s in range(N - 1):
            for a, b in zip(pos[s], pos[s + 1]):
                addq(b, b, params.w_step)
                addq(a, a, params.w_step)
                addq(a, b, -2 * params.w_step)
        for v, g in ((xN, gx), (yN, gy)):
            addq(v, v, params.w_goal)
            m.obj[v] = m.obj.get(v, 0.0) - 2 * params.w_goal * g
            m.obj_const += params.w_goal * g * g
    else:
        raise ValueError(f"unknown objective {params.objective}")
    return m


def expected_assign_counts(method: str, N: int, p: Partition, cover=None) -> dict:
    """Closed-form assignment-constraint sizes for N waypoints."""
    if method == "bigm":
        rows = sum(len(p.faces[i]) for i in range(p.d))  # one halfspace per edge
        return {"binaries": N * p.d, "continuous": 0, "inequalities": N * rows, "equalities": N}
    t = cover.depth
    return {"binaries": N * t, "continuous": N * p.n, "inequalities": N * 2 * t, "equalities": 3 * N}


def step_positions(model: MipModel, x, N: int) -> np.ndarray:
    return np.array([[x[model.index(f"x{s}")], x[model.index(f"y{s}")]] for s in range(1, N + 1)])


def trimmed_steps(model: MipModel, x, N: int) -> int:
    return int(sum(round(x[model.index(f"u{s}")]) for s in range(2, N + 1)))


def export_lp(m: MipModel, path):
    from .lpfile import export_lp as write
    return write(m, path)
