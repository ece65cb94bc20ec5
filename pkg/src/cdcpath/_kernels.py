"""Hot inner loops: dense simplex pivoting, ratio tests and triplet scans.

Each kernel exists twice.  ``NUMPY`` holds vectorised pure-numpy versions,
``NUMBA`` the same loops compiled with ``numba.njit``.  The active backend is
picked once at import time; set ``CDCPATH_DISABLE_NUMBA=1`` to force numpy
(also the fallback when numba cannot be imported).
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

# nonbasic status codes shared with solver.py
AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FIXED = 3


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _pivot_np(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[:, c] = 0.0
    T[r, c] = 1.0


def _primal_ratio_np(col, xb, lb, ub, basis, direction, tol):
    # entering moves by theta * direction; basic i moves by -theta*direction*col[i]
    alpha = direction * col
    theta = np.full(alpha.shape, np.inf)
    dec = alpha > tol
    inc = alpha < -tol
    theta[dec] = (xb[dec] - lb[dec]) / alpha[dec]
    theta[inc] = (ub[inc] - xb[inc]) / -alpha[inc]
    np.maximum(theta, 0.0, out=theta)
    best = theta.min() if theta.size else np.inf
    if not np.isfinite(best):
        return np.inf, -1, False
    ties = np.flatnonzero(theta <= best + 1e-12)
    # Bland-style: smallest basic variable index among ties
    row = ties[np.argmin(basis[ties])]
    return float(theta[row]), int(row), bool(inc[row])


def _price_np(d, status, tol, bland):
    gain = np.where(status == AT_LOWER, -d, np.where(status == AT_UPPER, d, -np.inf))
    cand = np.flatnonzero(gain > tol)
    if cand.size == 0:
        return -1
    if bland:
        return int(cand[0])
    return int(cand[np.argmax(gain[cand])])


def _dual_ratio_np(alpha, d, status, increase, tol):
    # leaving basic must increase (increase=True) or decrease
    sgn = -1.0 if increase else 1.0
    a = sgn * alpha
    ok = ((status == AT_LOWER) & (a > tol)) | ((status == AT_UPPER) & (a < -tol))
    cand = np.flatnonzero(ok)
    if cand.size == 0:
        return -1
    ratio = np.abs(d[cand]) / np.abs(alpha[cand])
    best = ratio.min()
    ties = cand[ratio <= best + 1e-12]
    # prefer the numerically largest pivot among ties
    return int(ties[np.argmax(np.abs(alpha[ties]))])


def _minimal_infeasible_triplet_np(pair_ok, fam):
    n = pair_ok.shape[0]
    famb = fam.astype(bool)
    for u in range(n):
        for v in range(u + 1, n):
            if not pair_ok[u, v]:
                continue
            ws = np.flatnonzero(pair_ok[u, v + 1:] & pair_ok[v, v + 1:]) + v + 1
            if ws.size == 0:
                continue
            both = famb[:, u] & famb[:, v]
            hit = famb[both][:, ws].any(axis=0)
            bad = ws[~hit]
            if bad.size:
                return u, v, int(bad[0])
    return -1, -1, -1


def _oracle_mismatches_np(fam, A, B):
    """Count subsets of size 1..3 where family containment and level test disagree."""
    n = fam.shape[1]
    famb = fam.astype(bool)
    Ab = A.astype(bool)
    Bb = B.astype(bool)
    count = 0
    idx = np.arange(n)
    # singles and pairs through a single pass over u
    for u in range(n):
        feas_u = famb[:, u].any()
        ib_u = not (Ab[:, u] & Bb[:, u]).any()
        count += int(feas_u != ib_u)
        for v in range(u + 1, n):
            both = famb[:, u] & famb[:, v]
            feas_uv = both.any()
            a_uv = Ab[:, u] | Ab[:, v]
            b_uv = Bb[:, u] | Bb[:, v]
            ib_uv = not (a_uv & b_uv).any()
            count += int(feas_uv != ib_uv)
            ws = idx[v + 1:]
            if ws.size == 0:
                continue
            feas = famb[both][:, ws].any(axis=0)
            hitA = a_uv[:, None] | Ab[:, ws]
            hitB = b_uv[:, None] | Bb[:, ws]
            ib = ~(hitA & hitB).any(axis=0)
            count += int((feas != ib).sum())
    return count


NUMPY = SimpleNamespace(
    name="numpy",
    pivot=_pivot_np,
    primal_ratio=_primal_ratio_np,
    price=_price_np,
    dual_ratio=_dual_ratio_np,
    minimal_infeasible_triplet=_minimal_infeasible_triplet_np,
    oracle_mismatches=_oracle_mismatches_np,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def pivot(T, r, c):
        m, n = T.shape
        p = T[r, c]
        for j in range(n):
            T[r, j] /= p
        for i in range(m):
            if i == r:
                continue
            f = T[i, c]
            if f != 0.0:
                for j in range(n):
                    T[i, j] -= f * T[r, j]
            T[i, c] = 0.0
        T[r, c] = 1.0

    @njit(cache=True)
    def primal_ratio(col, xb, lb, ub, basis, direction, tol):
        best = np.inf
        row = -1
        to_upper = False
        for i in range(col.shape[0]):
            a = direction * col[i]
            if a > tol:
                t = (xb[i] - lb[i]) / a
                up = False
            elif a < -tol:
                t = (ub[i] - xb[i]) / -a
                up = True
            else:
                continue
            if t < 0.0:
                t = 0.0
            if row < 0 or t < best - 1e-12:
                best = t
                row = i
                to_upper = up
            elif t <= best + 1e-12 and basis[i] < basis[row]:
                best = min(best, t)
                row = i
                to_upper = up
        return best, row, to_upper

    @njit(cache=True)
    def price(d, status, tol, bland):
        best = tol
        pick = -1
        for j in range(d.shape[0]):
            s = status[j]
            if s == 0:
                g = -d[j]
            elif s == 1:
                g = d[j]
            else:
                continue
            if g > tol:
                if bland:
                    return j
                if g > best:
                    best = g
                    pick = j
        return pick

    @njit(cache=True)
    def dual_ratio(alpha, d, status, increase, tol):
        sgn = -1.0 if increase else 1.0
        best = np.inf
        pick = -1
        for j in range(alpha.shape[0]):
            a = sgn * alpha[j]
            s = status[j]
            if not ((s == 0 and a > tol) or (s == 1 and a < -tol)):
                continue
            r = abs(d[j]) / abs(alpha[j])
            if r < best - 1e-12:
                best = r
                pick = j
            elif r <= best + 1e-12 and abs(alpha[j]) > abs(alpha[pick]):
                pick = j
        return pick

    @njit(cache=True)
    def _contains(fam, u, v, w):
        for f in range(fam.shape[0]):
            if fam[f, u] and fam[f, v] and fam[f, w]:
                return True
        return False

    @njit(cache=True)
    def minimal_infeasible_triplet(pair_ok, fam):
        n = pair_ok.shape[0]
        for u in range(n):
            for v in range(u + 1, n):
                if not pair_ok[u, v]:
                    continue
                for w in range(v + 1, n):
                    if pair_ok[u, w] and pair_ok[v, w] and not _contains(fam, u, v, w):
                        return u, v, w
        return -1, -1, -1

    @njit(cache=True)
    def _ib_ok(A, B, u, v, w):
        for j in range(A.shape[0]):
            a = A[j, u] or A[j, v] or (w >= 0 and A[j, w])
            b = B[j, u] or B[j, v] or (w >= 0 and B[j, w])
            if a and b:
                return False
        return True

    @njit(cache=True)
    def oracle_mismatches(fam, A, B):
        n = fam.shape[1]
        count = 0
        for u in range(n):
            feas = False
            for f in range(fam.shape[0]):
                if fam[f, u]:
                    feas = True
                    break
            if feas != _ib_ok(A, B, u, u, -1):
                count += 1
            for v in range(u + 1, n):
                feas = False
                for f in range(fam.shape[0]):
                    if fam[f, u] and fam[f, v]:
                        feas = True
                        break
                if feas != _ib_ok(A, B, u, v, -1):
                    count += 1
                for w in range(v + 1, n):
                    if _contains(fam, u, v, w) != _ib_ok(A, B, u, v, w):
                        count += 1
        return count

    return SimpleNamespace(
        name="numba",
        pivot=pivot,
        primal_ratio=primal_ratio,
        price=price,
        dual_ratio=dual_ratio,
        minimal_infeasible_triplet=minimal_infeasible_triplet,
        oracle_mismatches=oracle_mismatches,
    )


def _numba_requested() -> bool:
    flag = os.environ.get("CDCPATH_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


NUMBA = None
if _numba_requested():
    try:
        NUMBA = _build_numba()
    except ImportError:  # pragma: no cover - numba is optional
        NUMBA = None

ACTIVE = NUMBA if NUMBA is not None else NUMPY


def backend_name() -> str:
    return ACTIVE.name
