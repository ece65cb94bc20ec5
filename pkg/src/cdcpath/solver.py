"""Dense bounded-variable simplex and best-bound branch and bound."""
from __future__ import annotations

import heapq
import json
import time
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from ._kernels import AT_LOWER, AT_UPPER, BASIC, FIXED

FEAS_TOL = 1e-7
INT_TOL = 1e-6
DJ_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 60     # check drift this often
REFACTOR_MAX = 600      # refactor unconditionally after this many pivots
BLAND_AFTER = 30
DRIFT_TOL = 1e-9


class UnsupportedModel(ValueError):
    pass


@dataclass
class LpSolution:
    status: str                 # optimal | infeasible | unbounded | iteration-limit
    objective: float = float("nan")
    x: np.ndarray = None
    basis: list = field(default_factory=list)
    duals: np.ndarray = None    # one per model row, sign of the original row
    reduced_costs: np.ndarray = None
    unique: bool = False
    iterations: int = 0

    def values(self, model) -> dict:
        return model.values(self.x)


@dataclass
class BnbResult:
    status: str                 # optimal | infeasible | time-limit | node-limit
    objective: float = float("nan")
    x: np.ndarray = None
    bound: float = float("-inf")
    gap: float = float("inf")
    nodes: int = 0
    wall_time: float = 0.0
    bound_history: list = field(default_factory=list)

    def to_json(self, model=None) -> dict:
        out = {
            "status": self.status,
            "objective": _num(self.objective),
            "bound": _num(self.bound),
            "gap": _num(self.gap),
            "nodes": self.nodes,
            "wall_time": round(self.wall_time, 6),
        }
        if self.x is not None and model is not None:
            out["values"] = {k: round(v, 9) for k, v in model.values(self.x).items()}
        return out

    def dumps(self, model=None) -> str:
        return json.dumps(self.to_json(model), indent=2)


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else None


# ---------------------------------------------------------------------------
# standard form
# ---------------------------------------------------------------------------

class _Standard:
    """A x + s = b with one slack per row; >= rows negated, = rows get fixed slacks."""

    def __init__(self, model):
        if model.quad:
            raise UnsupportedModel("quadratic objective terms are not supported in-process")
        n = len(model.vars)
        m = len(model.rows)
        rows, cols, vals = [], [], []
        b = np.zeros(m)
        slack_ub = np.zeros(m)
        self.row_sign = np.ones(m)
        for i, r in enumerate(model.rows):
            s = -1.0 if r.sense == ">=" else 1.0
            self.row_sign[i] = s
            for k, a in r.coefs.items():
                rows.append(i)
                cols.append(k)
                vals.append(s * a)
            b[i] = s * r.rhs
            slack_ub[i] = 0.0 if r.sense == "=" else np.inf
        A = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
        self.n, self.m = n, m
        self.A = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
        self.b = b
        self.c = np.zeros(n + m)
        for k, a in model.obj.items():
            self.c[k] = a
        self.lb = np.concatenate([[v.lb for v in model.vars], np.zeros(m)])
        self.ub = np.concatenate([[v.ub for v in model.vars], slack_ub])


class _Simplex:
    """Tableau T = [B^-1 A ; d] over structurals, slacks and phase-1 artificials."""

    def __init__(self, std: _Standard):
        self.std = std
        self.k = _kernels.ACTIVE
        self.iterations = 0

    # -- state ---------------------------------------------------------------
    def copy_state(self):
        return (self.T.copy(), self.xb.copy(), self.x.copy(), self.basis.copy(),
                self.status.copy(), self.lb.copy(), self.ub.copy(), self.c.copy(), self.A)

    def load_state(self, st):
        T, xb, x, basis, status, lb, ub, c, A = st
        self.T, self.xb, self.x = T.copy(), xb.copy(), x.copy()
        self.basis, self.status = basis.copy(), status.copy()
        self.lb, self.ub, self.c, self.A = lb.copy(), ub.copy(), c.copy(), A
        self.since_refactor = 0

    def basis_state(self):
        """Compact restart point: the basis and bounds, without the tableau."""
        return (self.basis.copy(), self.status.copy(), self.lb.copy(), self.ub.copy(), self.c, self.A)

    def load_basis(self, st):
        basis, status, lb, ub, c, A = st
        self.basis, self.status = basis.copy(), status.copy()
        self.lb, self.ub, self.c, self.A = lb.copy(), ub.copy(), c, A
        self.x = np.zeros(A.shape[1])
        self.refactor()

    # -- setup ---------------------------------------------------------------
    def cold_start(self, lb=None, ub=None):
        std = self.std
        n, m = std.n, std.m
        self.lb = std.lb.copy()
        self.ub = std.ub.copy()
        if lb is not None:
            self.lb[:n] = lb
            self.ub[:n] = ub
        x = self.lb.copy()
        x[n:] = 0.0
        r = std.b - std.A[:, :n] @ x[:n]
        art_rows, art_sign = [], []
        basis = np.empty(m, dtype=np.int64)
        for i in range(m):
            if r[i] >= -FEAS_TOL and (r[i] <= self.ub[n + i] + FEAS_TOL):
                basis[i] = n + i
            else:
                art_rows.append(i)
                art_sign.append(1.0 if r[i] >= 0 else -1.0)
        na = len(art_rows)
        art = sp.csc_matrix((art_sign, (art_rows, np.arange(na))), shape=(m, na))
        self.A = sp.hstack([std.A, art], format="csc")
        for j, i in enumerate(art_rows):
            basis[i] = n + m + j
        self.lb = np.concatenate([self.lb, np.zeros(na)])
        self.ub = np.concatenate([self.ub, np.full(na, np.inf)])
        self.x = np.concatenate([x, np.zeros(na)])
        self.status = np.where(self.lb == self.ub, FIXED, AT_LOWER).astype(np.int64)
        self.basis = basis
        self.status[basis] = BASIC
        self.n_art = na
        self.art0 = n + m
        c1 = np.zeros(self.A.shape[1])
        c1[n + m:] = 1.0
        self.c = c1
        self.refactor()
        return na

    def enter_phase2(self):
        self.lb[self.art0:] = 0.0
        self.ub[self.art0:] = 0.0
        for j in range(self.art0, self.A.shape[1]):
            if self.status[j] != BASIC:
                self.status[j] = FIXED
                self.x[j] = 0.0
        self.c = np.concatenate([self.std.c, np.zeros(self.A.shape[1] - self.std.c.size)])
        self.refactor()

    def refactor(self):
        m = self.std.m
        N = self.A.shape[1]
        nb = self.status != BASIC
        self.x[nb] = np.where(self.status[nb] == AT_UPPER, self.ub[nb], self.lb[nb])
        T = np.empty((m + 1, N))
        if m:
            lu = spla.splu(self.A[:, self.basis].tocsc())
            xn = self.x.copy()
            xn[self.basis] = 0.0
            rhs = np.empty((m, N + 1))
            rhs[:, :N] = self.A.toarray()
            rhs[:, N] = self.std.b - self.A @ xn
            sol = lu.solve(rhs)
            T[:m] = sol[:, :N]
            self.xb = sol[:, N].copy()
        else:
            self.xb = np.zeros(0)
        T[m] = self.c - self.c[self.basis] @ T[:m]
        T[m, self.basis] = 0.0
        self.T = np.ascontiguousarray(T)
        self.since_refactor = 0

    def maybe_refactor(self):
        if self.since_refactor >= REFACTOR_MAX or self.residual() > DRIFT_TOL:
            self.refactor()

    # -- iterations ----------------------------------------------------------
    def _pivot(self, r, q):
        self.k.pivot(self.T, r, q)
        self.iterations += 1
        self.since_refactor += 1

    def primal(self, max_iter):
        m = self.std.m
        degenerate = 0
        for _ in range(max_iter):
            if self.since_refactor and self.since_refactor % REFACTOR_EVERY == 0:
                self.maybe_refactor()
            d = self.T[m]
            q = self.k.price(d, self.status, DJ_TOL, degenerate >= BLAND_AFTER)
            if q < 0:
                return "optimal"
            direction = 1.0 if self.status[q] == AT_LOWER else -1.0
            col = self.T[:m, q]
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]
            theta, row, to_upper = self.k.primal_ratio(col, self.xb, lbB, ubB, self.basis,
                                                       direction, PIVOT_TOL)
            span = self.ub[q] - self.lb[q]
            if span <= theta:
                # bound flip
                self.xb -= direction * span * col
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
                degenerate = 0
                self.iterations += 1
                continue
            if row < 0:
                return "unbounded"
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            self.xb -= theta * direction * col
            self._swap(row, q, self.x[q] + theta * direction, to_upper)
        return "iteration-limit"

    def _swap(self, row, q, value_q, leave_upper):
        out = self.basis[row]
        if self.lb[out] == self.ub[out]:
            self.status[out] = FIXED
            self.x[out] = self.lb[out]
        elif leave_upper:
            self.status[out] = AT_UPPER
            self.x[out] = self.ub[out]
        else:
            self.status[out] = AT_LOWER
            self.x[out] = self.lb[out]
        self._pivot(row, q)
        self.basis[row] = q
        self.status[q] = BASIC
        self.xb[row] = value_q

    def dual(self, max_iter):
        m = self.std.m
        for _ in range(max_iter):
            if self.since_refactor and self.since_refactor % REFACTOR_EVERY == 0:
                self.maybe_refactor()
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]
            below = lbB - self.xb
            above = self.xb - ubB
            viol = np.maximum(below, above)
            if m == 0 or viol.max() <= FEAS_TOL:
                return "feasible"
            r = int(np.argmax(viol))
            increase = below[r] > above[r]
            target = lbB[r] if increase else ubB[r]
            alpha = self.T[r]
            q = self.k.dual_ratio(alpha, self.T[m], self.status, increase, PIVOT_TOL)
            if q < 0:
                return "infeasible"
            delta = (self.xb[r] - target) / alpha[q]
            self.xb -= delta * self.T[:m, q]
            self._swap(r, q, self.x[q] + delta, not increase)
        return "iteration-limit"

    def set_bounds(self, j, lo, hi):
        self.lb[j], self.ub[j] = lo, hi
        if self.status[j] == BASIC:
            return
        old = self.x[j]
        if lo == hi:
            self.status[j] = FIXED
            new = lo
        else:
            new = hi if self.status[j] == AT_UPPER else lo
        if new != old:
            self.xb -= (new - old) * self.T[:self.std.m, j]
            self.x[j] = new

    # -- results -------------------------------------------------------------
    def full_x(self):
        x = self.x.copy()
        x[self.basis] = self.xb
        return x

    def residual(self):
        """Largest |A x - b| of the current basic solution; measures drift since the last refactor."""
        if self.std.m == 0:
            return 0.0
        return float(np.abs(self.A @ self.full_x() - self.std.b).max())

    def primal_infeasibility(self):
        if self.std.m == 0:
            return 0.0
        return float(max(0.0, (self.lb[self.basis] - self.xb).max(), (self.xb - self.ub[self.basis]).max()))

    def solution(self, names=None) -> LpSolution:
        std = self.std
        x = self.full_x()
        d = self.T[std.m]
        duals = -d[std.n:std.n + std.m] * std.row_sign
        free = (self.status == AT_LOWER) | (self.status == AT_UPPER)
        unique = bool(np.all(np.abs(d[free]) > 1e-9))
        return LpSolution(
            status="optimal",
            objective=float(std.c[:std.n] @ x[:std.n]),
            x=x[:std.n],
            basis=[int(j) for j in self.basis],
            duals=duals,
            reduced_costs=d[:std.n].copy(),
            unique=unique,
            iterations=self.iterations,
        )


def _finish(s: _Simplex, max_iter: int) -> str:
    """Run primal to optimality; refactor and polish only if the basic solution has drifted."""
    for _ in range(4):
        st = s.primal(max_iter)
        if st != "optimal":
            return st
        if s.since_refactor == 0 or s.residual() <= DRIFT_TOL:
            return "optimal"
        s.refactor()
        if s.primal_infeasibility() > FEAS_TOL:
            if s.dual(max_iter) == "infeasible":
                return "infeasible"
            continue
        if s.k.price(s.T[s.std.m], s.status, DJ_TOL, False) < 0:
            return "optimal"
    return "optimal"


def _cold_solve(std: _Standard, lb=None, ub=None, max_iter=None):
    s = _Simplex(std)
    max_iter = max_iter or 50 * (std.m + std.n + 10)
    na = s.cold_start(lb, ub)
    if na:
        st = _finish(s, max_iter)
        if st == "iteration-limit":
            return s, st
        art = s.full_x()[s.art0:]
        if art.sum() > FEAS_TOL * max(1, na):
            return s, "infeasible"
    s.enter_phase2()
    return s, _finish(s, max_iter)


def _as_min(model):
    """Minimization view of ``model``; returns (model, sign of the original objective)."""
    if model.sense == "min":
        return model, 1.0
    flipped = replace(model, obj={k: -a for k, a in model.obj.items()}, obj_const=-model.obj_const,
                      quad={k: -q for k, q in model.quad.items()}, sense="min")
    return flipped, -1.0


def solve_lp(model, max_iter: int | None = None) -> LpSolution:
    """LP relaxation of ``model`` (binaries relaxed to [0, 1])."""
    model, flip = _as_min(model)
    std = _Standard(model)
    s, st = _cold_solve(std, max_iter=max_iter)
    if st != "optimal":
        return LpSolution(status=st, iterations=s.iterations)
    sol = s.solution()
    sol.objective += model.obj_const
    if flip < 0:
        sol.objective, sol.duals, sol.reduced_costs = -sol.objective, -sol.duals, -sol.reduced_costs
    return sol


# ---------------------------------------------------------------------------
# branch and bound
# ---------------------------------------------------------------------------

@dataclass(order=True)
class _Node:
    key: tuple
    bound: float = field(compare=False)
    seq: int = field(compare=False)
    fixes: tuple = field(compare=False)   # ((var, value), ...)
    parent: int = field(compare=False, default=-1)
    basis: tuple = field(compare=False, default=None)
    rank: int = field(compare=False, default=0)   # 0 for the child nearest the parent LP value


def _key(bound, depth, rank, seq, diving):
    """Depth first (nearest child first) until an incumbent exists, then best bound, deepest first on ties."""
    if diving:
        return (-depth, rank, seq)
    return (round(bound, 9), -depth, seq)


def solve_milp(model, time_limit: float = 300.0, gap: float = 0.0,
               node_limit: int | None = None, log=None) -> BnbResult:
    """Best-bound branch and bound on the binaries; LP warm starts through dual simplex."""
    model, flip = _as_min(model)
    t0 = time.perf_counter()
    std = _Standard(model)
    bins = np.array(model.binaries, dtype=np.int64)
    base_lb = std.lb[:std.n].copy()
    base_ub = std.ub[:std.n].copy()
    const = model.obj_const
    max_iter = 50 * (std.m + std.n + 10)

    states = OrderedDict()   # node seq -> full tableau, small LRU; children also keep the parent basis
    per_state = (std.m + 1) * (std.n + 2 * std.m + 1)
    keep = max(2, min(16, int(4e7 // max(per_state, 1))))

    def solve_node(node):
        lb, ub = base_lb.copy(), base_ub.copy()
        for j, v in node.fixes:
            lb[j] = ub[j] = v
        if node.parent in states or node.basis is not None:
            s = _Simplex(std)
            if node.parent in states:
                states.move_to_end(node.parent)
                s.load_state(states[node.parent])
            else:
                s.load_basis(node.basis)
            for j, v in node.fixes:
                s.set_bounds(j, v, v)
            st = s.dual(max_iter)
            if st == "feasible":
                st = _finish(s, max_iter)
            elif st == "infeasible":
                s.refactor()
                st = s.dual(max_iter)
                st = "infeasible" if st == "infeasible" else _finish(s, max_iter)
            if st not in ("optimal", "infeasible"):
                s, st = _cold_solve(std, lb, ub, max_iter)
        else:
            s, st = _cold_solve(std, lb, ub, max_iter)
        return s, st

    res = BnbResult(status="infeasible")
    incumbent = np.inf
    best_x = None
    heap = [_Node(_key(-np.inf, 0, 0, 0, True), -np.inf, 0, ())]
    seq = 1
    bound = -np.inf
    stopped = None
    while heap:
        if time.perf_counter() - t0 > time_limit:
            stopped = "time-limit"
            break
        if node_limit is not None and res.nodes >= node_limit:
            stopped = "node-limit"
            break
        node = heapq.heappop(heap)
        if node.bound >= incumbent - 1e-9:
            continue
        s, st = solve_node(node)
        res.nodes += 1
        if st == "unbounded":
            raise UnsupportedModel("LP relaxation is unbounded")
        if st != "optimal":
            continue
        x = s.full_x()[:std.n]
        obj = float(std.c[:std.n] @ x) + const
        if len(states) >= keep:
            states.popitem(last=False)
        if obj >= incumbent - 1e-9:
            continue
        xb = x[bins]
        dist = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb) if bins.size else np.zeros(0)
        if dist.size == 0 or dist.max() <= INT_TOL:
            cand = x.copy()
            cand[bins] = np.round(cand[bins])
            if model.max_violation(cand) <= INT_TOL:
                if best_x is None:
                    # first incumbent ends the dive; reorder the open nodes by bound
                    for nd in heap:
                        nd.key = _key(nd.bound, len(nd.fixes), nd.rank, nd.seq, False)
                    heapq.heapify(heap)
                incumbent = model.objective_value(cand)
                best_x = cand
                if log:
                    log(f"node {res.nodes}: incumbent {incumbent:.9g}")
                dist = np.zeros(0)
        if dist.size and dist.max() > 0.0:
            j = int(bins[int(np.argmax(dist))])
            states[node.seq] = s.copy_state()
            restart = s.basis_state()
            near = float(round(x[j]))
            for v in (0.0, 1.0):
                fixes = node.fixes + ((j, v),)
                rank = 0 if v == near else 1
                child = _Node(_key(obj, len(fixes), rank, seq, best_x is None), obj, seq, fixes,
                              node.seq, basis=restart, rank=rank)
                heapq.heappush(heap, child)
                seq += 1
        live = min((nd.bound for nd in heap), default=incumbent)
        cur = min(live, incumbent)
        bound = max(bound, cur) if np.isfinite(cur) else bound
        res.bound_history.append(bound)
        if gap > 0 and best_x is not None and heap:
            if (incumbent - bound) / max(1.0, abs(incumbent)) <= gap:
                break
    res.wall_time = time.perf_counter() - t0
    if best_x is not None:
        res.x = best_x
        res.objective = incumbent
    if stopped is None:
        res.status = "optimal" if best_x is not None else "infeasible"
        if best_x is not None:
            bound = incumbent
    else:
        res.status = stopped
        if heap:
            bound = max(bound, min(min(nd.bound for nd in heap), incumbent))
    res.bound = bound
    if best_x is not None and np.isfinite(bound):
        res.gap = max(0.0, (incumbent - bound) / max(1.0, abs(incumbent)))
    if res.bound_history and res.status == "optimal":
        res.bound_history.append(bound)
    if flip < 0:
        res.objective, res.bound = -res.objective, -res.bound
        res.bound_history = [-b for b in res.bound_history]
    return res
