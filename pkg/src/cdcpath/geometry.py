"""Exact 2D predicates and constrained Delaunay triangulation of free space."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Point = tuple  # (x, y); floats or Fractions

INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"

MERGE_TOL = 1e-12

# Shewchuk-style static filter constants (slightly padded)
_ORIENT_ERR = 3.4e-16
_INCIRCLE_ERR = 1.2e-15
_TINY = 1e-280  # below this the float filter may have underflowed


class DegenerateInput(ValueError):
    """The environment violates a geometric precondition."""


def _exact(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def orient(a: Point, b: Point, c: Point) -> int:
    """Sign of twice the signed area of triangle abc (+1 for CCW)."""
    if all(type(t) is float or type(t) is int for t in (*a, *b, *c)):
        dx1, dy2 = b[0] - a[0], c[1] - a[1]
        dy1, dx2 = b[1] - a[1], c[0] - a[0]
        if (dx1 == 0 or dy2 == 0) and (dy1 == 0 or dx2 == 0):
            return 0
        left = dx1 * dy2
        right = dy1 * dx2
        det = left - right
        bound = _ORIENT_ERR * (abs(left) + abs(right))
        if bound > _TINY:
            if det > bound:
                return 1
            if det < -bound:
                return -1
    ax, ay, bx, by, cx, cy = map(_exact, (*a, *b, *c))
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def incircle(a: Point, b: Point, c: Point, d: Point) -> int:
    """+1 if d lies strictly inside the circumcircle of CCW triangle abc."""
    if all(type(t) is float or type(t) is int for t in (*a, *b, *c, *d)):
        adx, ady = a[0] - d[0], a[1] - d[1]
        bdx, bdy = b[0] - d[0], b[1] - d[1]
        cdx, cdy = c[0] - d[0], c[1] - d[1]
        alift = adx * adx + ady * ady
        blift = bdx * bdx + bdy * bdy
        clift = cdx * cdx + cdy * cdy
        bc = bdx * cdy - cdx * bdy
        ca = cdx * ady - adx * cdy
        ab = adx * bdy - bdx * ady
        det = alift * bc + blift * ca + clift * ab
        perm = (alift * (abs(bdx * cdy) + abs(cdx * bdy))
                + blift * (abs(cdx * ady) + abs(adx * cdy))
                + clift * (abs(adx * bdy) + abs(bdx * ady)))
        bound = _INCIRCLE_ERR * perm
        if bound > _TINY:
            if det > bound:
                return 1
            if det < -bound:
                return -1
    a, b, c, d = ([_exact(t) for t in p] for p in (a, b, c, d))
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    det = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
           + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
           + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
    return (det > 0) - (det < 0)


def on_segment(p: Point, a: Point, b: Point, strict: bool = False) -> bool:
    """p lies on segment ab (strictly between the endpoints when ``strict``)."""
    if orient(a, b, p) != 0:
        return False
    ax, ay, bx, by, px, py = map(_exact, (*a, *b, *p))
    dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay)
    length2 = (bx - ax) ** 2 + (by - ay) ** 2
    if strict:
        return 0 < dot < length2
    return 0 <= dot <= length2


def segments_cross(p, q, a, b) -> bool:
    """Proper crossing: interiors intersect in a single point."""
    return (orient(p, q, a) * orient(p, q, b) < 0
            and orient(a, b, p) * orient(a, b, q) < 0)


def point_in_polygon(p: Point, poly: Sequence[Point]) -> str:
    """Classify p against a simple polygon as inside, boundary or outside."""
    n = len(poly)
    for i in range(n):
        if on_segment(p, poly[i], poly[(i + 1) % n]):
            return BOUNDARY
    # crossing number with half-open rule, exact via orient
    inside = False
    py = _exact(p[1])
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        ay, by = _exact(a[1]), _exact(b[1])
        if (ay > py) != (by > py):
            o = orient(a, b, p)
            if (by > ay and o > 0) or (by < ay and o < 0):
                inside = not inside
    return INSIDE if inside else OUTSIDE


def signed_area(poly: Sequence[Point]) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += float(x0) * float(y1) - float(x1) * float(y0)
    return s / 2.0


def convex_hull(points: Sequence[Point]) -> list[int]:
    """Indices of strictly extreme points in CCW order (monotone chain)."""
    order = sorted(range(len(points)), key=lambda i: (points[i][0], points[i][1]))
    if len(order) < 3:
        return order

    def chain(seq):
        out: list[int] = []
        for i in seq:
            while len(out) >= 2 and orient(points[out[-2]], points[out[-1]], points[i]) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = chain(order)
    upper = chain(reversed(order))
    return lower[:-1] + upper[:-1]


def convex_polygons_overlap(P: Sequence[Point], Q: Sequence[Point]) -> bool:
    """True iff the interiors of two convex CCW polygons intersect (exact)."""
    for poly, other in ((P, Q), (Q, P)):
        n = len(poly)
        for i in range(n):
            a, b = poly[i], poly[(i + 1) % n]
            if all(orient(a, b, q) <= 0 for q in other):
                return False
    return True


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------

@dataclass
class Environment:
    bounds: tuple = ((0.0, 0.0), (1.0, 1.0))
    obstacles: list = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self):
        (x0, y0), (x1, y1) = self.bounds
        self.bounds = ((float(x0), float(y0)), (float(x1), float(y1)))
        obs = []
        for poly in self.obstacles:
            poly = [(float(x), float(y)) for x, y in poly]
            if len(poly) >= 3 and signed_area(poly) < 0:
                poly = poly[::-1]
            obs.append(tuple(poly))
        self.obstacles = obs

    @property
    def corners(self) -> list:
        (x0, y0), (x1, y1) = self.bounds
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    @property
    def area(self) -> float:
        (x0, y0), (x1, y1) = self.bounds
        return (x1 - x0) * (y1 - y0)

    def is_internal(self, k: int) -> bool:
        """Obstacle k has no edge lying on the bounds boundary."""
        box = self.corners
        poly = self.obstacles[k]
        for i in range(len(poly)):
            a, b = poly[i], poly[(i + 1) % len(poly)]
            for j in range(4):
                c, d = box[j], box[(j + 1) % 4]
                if on_segment(a, c, d) and on_segment(b, c, d):
                    return False
        return True

    def has_triangular_internal_obstacle(self) -> bool:
        return any(len(p) == 3 and self.is_internal(k) for k, p in enumerate(self.obstacles))

    def free_point(self, p: Point) -> bool:
        """p lies in the closed free region."""
        if point_in_polygon(p, self.corners) == OUTSIDE:
            return False
        return all(point_in_polygon(p, poly) != INSIDE for poly in self.obstacles)

    def to_json(self) -> dict:
        out = {"bounds": [list(self.bounds[0]), list(self.bounds[1])],
               "obstacles": [[list(v) for v in poly] for poly in self.obstacles]}
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Environment":
        bounds = data.get("bounds", [[0.0, 0.0], [1.0, 1.0]])
        return cls(bounds=(tuple(bounds[0]), tuple(bounds[1])),
                   obstacles=[[tuple(v) for v in poly] for poly in data.get("obstacles", [])],
                   seed=data.get("seed"))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "Environment":
        return cls.from_json(json.loads(Path(path).read_text()))


def check_polygon(poly: Sequence[Point]) -> None:
    n = len(poly)
    if n < 3:
        raise DegenerateInput("polygon needs at least 3 vertices")
    for i in range(n):
        for j in range(i + 1, n):
            if max(abs(poly[i][0] - poly[j][0]), abs(poly[i][1] - poly[j][1])) <= MERGE_TOL:
                raise DegenerateInput(f"duplicate polygon vertex {poly[i]}")
    for i in range(n):
        if orient(poly[i - 1], poly[i], poly[(i + 1) % n]) == 0:
            raise DegenerateInput(f"collinear consecutive vertices at {poly[i]}")
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            c, d = poly[j], poly[(j + 1) % n]
            if segments_cross(a, b, c, d) or on_segment(c, a, b) or on_segment(a, c, d):
                raise DegenerateInput("self-intersecting polygon")


def check_environment(env: Environment) -> None:
    box = env.corners
    for poly in env.obstacles:
        check_polygon(poly)
        for v in poly:
            if point_in_polygon(v, box) == OUTSIDE:
                raise DegenerateInput(f"obstacle vertex {v} outside bounds")
    obs = env.obstacles
    for i in range(len(obs)):
        for j in range(i + 1, len(obs)):
            P, Q = obs[i], obs[j]
            for a, b in zip(P, P[1:] + P[:1]):
                for c, d in zip(Q, Q[1:] + Q[:1]):
                    if segments_cross(a, b, c, d):
                        raise DegenerateInput(f"obstacles {i} and {j} overlap")
            if any(point_in_polygon(v, Q) == INSIDE for v in P) or \
                    any(point_in_polygon(v, P) == INSIDE for v in Q):
                raise DegenerateInput(f"obstacles {i} and {j} overlap")


# ---------------------------------------------------------------------------
# Triangulation
# ---------------------------------------------------------------------------

@dataclass
class Triangulation:
    vertices: list                 # lexicographically sorted points
    triangles: list                # CCW index triples, smallest index first
    constrained_edges: set         # (i, j) with i < j
    free_triangles: list = field(default_factory=list)

    @property
    def obstacle_triangles(self) -> list:
        free = set(self.free_triangles)
        return [t for t in self.triangles if t not in free]

    def triangle_points(self, t) -> list:
        return [self.vertices[i] for i in t]

    def edges(self) -> set:
        out = set()
        for a, b, c in self.triangles:
            for u, v in ((a, b), (b, c), (c, a)):
                out.add((min(u, v), max(u, v)))
        return out


def _canon(t):
    k = t.index(min(t))
    return t[k:] + t[:k]


def _batch_orient_sign(P, Q, R):
    """Vectorised orient(P, Q, R[k]); exact fallback on uncertain entries."""
    left = (Q[0] - P[0]) * (R[:, 1] - P[1])
    right = (Q[1] - P[1]) * (R[:, 0] - P[0])
    det = left - right
    bound = _ORIENT_ERR * (np.abs(left) + np.abs(right))
    sign = np.where(det > bound, 1, np.where(det < -bound, -1, 0))
    for k in np.flatnonzero(np.abs(det) <= bound):
        sign[k] = orient(tuple(P), tuple(Q), tuple(R[k]))
    return sign


def _split_segments(points, segments):
    """Split constraint segments at any vertex lying in their interior."""
    pts = np.asarray(points, dtype=float)
    out = set()
    for i, j in segments:
        inner = []
        for k in range(len(points)):
            if k in (i, j):
                continue
            if on_segment(points[k], points[i], points[j], strict=True):
                inner.append(k)
        d = pts[j] - pts[i]
        inner.sort(key=lambda k: float(np.dot(pts[k] - pts[i], d)))
        chain = [i] + inner + [j]
        for u, v in zip(chain, chain[1:]):
            out.add((min(u, v), max(u, v)))
    return out


def triangulate(points: Sequence[Point], segments: Iterable, max_flips: int | None = None) -> tuple:
    """Constrained Delaunay triangulation of ``points`` honouring ``segments``.

    Points must already be distinct; the convex hull is triangulated.
    A greedy maximal non-crossing edge set seeded with the constraints gives a
    constrained triangulation, then Lawson flips on unconstrained edges make it
    constrained-Delaunay.  Cocircular ties flip toward the diagonal incident to
    the lexicographically smallest vertex.

    Returns ``(triangles, constrained_edges)``.
    """
    n = len(points)
    pts = np.asarray(points, dtype=float)
    cons = _split_segments(points, segments)
    for (a, b) in cons:
        for (c, d) in cons:
            if (a, b) < (c, d) and len({a, b, c, d}) == 4 and \
                    segments_cross(points[a], points[b], points[c], points[d]):
                raise DegenerateInput("constraint segments cross")

    edges = set(cons)
    edge_arr = [list(e) for e in sorted(edges)]
    cands = [(float(np.hypot(*(pts[i] - pts[j]))), i, j)
             for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
    cands.sort()
    for _, i, j in cands:
        P, Q = pts[i], pts[j]
        others = np.array([k for k in range(n) if k != i and k != j], dtype=int)
        if others.size:
            s = _batch_orient_sign(P, Q, pts[others])
            col = others[s == 0]
            if col.size:
                t = (pts[col] - P) @ (Q - P)
                L = float((Q - P) @ (Q - P))
                hit = [k for k, tk in zip(col, t) if -1e-9 * L < tk < L * (1 + 1e-9)]
                if any(on_segment(points[k], points[i], points[j], strict=True) for k in hit):
                    continue
        if edge_arr:
            E = np.asarray(edge_arr, dtype=int)
            keep = (E[:, 0] != i) & (E[:, 0] != j) & (E[:, 1] != i) & (E[:, 1] != j)
            E = E[keep]
            if len(E):
                s1 = _batch_orient_sign(P, Q, pts[E[:, 0]])
                s2 = _batch_orient_sign(P, Q, pts[E[:, 1]])
                maybe = np.flatnonzero(s1 * s2 < 0)
                crossed = False
                for m in maybe:
                    a, b = E[m]
                    if orient(points[a], points[b], points[i]) * orient(points[a], points[b], points[j]) < 0:
                        crossed = True
                        break
                if crossed:
                    continue
        edges.add((i, j))
        edge_arr.append([i, j])

    adj = {k: set() for k in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    dedge = {}
    for i, j in edges:
        for w in adj[i] & adj[j]:
            if w < j:
                continue
            o = orient(points[i], points[j], points[w])
            if o == 0:
                continue
            tri = (i, j, w) if o > 0 else (i, w, j)
            others = np.array([k for k in range(n) if k not in tri], dtype=int)
            if others.size:
                A, B, C = (pts[v] for v in tri)
                s = (_batch_orient_sign(A, B, pts[others]) > 0) & \
                    (_batch_orient_sign(B, C, pts[others]) > 0) & \
                    (_batch_orient_sign(C, A, pts[others]) > 0)
                if s.any():
                    continue
            a, b, c = tri
            dedge[(a, b)] = c
            dedge[(b, c)] = a
            dedge[(c, a)] = b

    # Lawson flips on unconstrained edges
    stack = sorted({(min(u, v), max(u, v)) for (u, v) in dedge} - cons)
    limit = max_flips if max_flips is not None else 50 * n * n + 100
    flips = 0
    while stack:
        u, v = stack.pop()
        if (u, v) in cons or (u, v) not in dedge or (v, u) not in dedge:
            continue
        a = dedge[(u, v)]
        b = dedge[(v, u)]
        ic = incircle(points[u], points[v], points[a], points[b])
        if ic < 0 or (ic == 0 and not min(a, b) < min(u, v)):
            continue
        if ic == 0 and (orient(points[a], points[b], points[u]) * orient(points[a], points[b], points[v]) >= 0):
            continue
        flips += 1
        if flips > limit:
            raise RuntimeError("edge flipping did not converge")
        for e in ((u, v), (v, a), (a, u), (v, u), (u, b), (b, v)):
            del dedge[e]
        for x, y, z in ((u, b, a), (b, v, a)):
            dedge[(x, y)] = z
            dedge[(y, z)] = x
            dedge[(z, x)] = y
        for x, y in ((u, b), (b, v), (v, a), (a, u)):
            stack.append((min(x, y), max(x, y)))

    tris = sorted({_canon((x, y, z)) for (x, y), z in dedge.items()})
    return tris, cons


def merge_points(points: Sequence[Point], tol: float = MERGE_TOL) -> tuple:
    """Deduplicate points within ``tol``; returns (unique, index map)."""
    uniq: list = []
    index = []
    for p in points:
        for k, q in enumerate(uniq):
            if abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol:
                index.append(k)
                break
        else:
            index.append(len(uniq))
            uniq.append(p)
    return uniq, index


def constrained_delaunay(env: Environment) -> Triangulation:
    """CDT of the bounds box with obstacle boundaries as constraints."""
    check_environment(env)
    raw = list(env.corners)
    segs_raw = [(k, (k + 1) % 4) for k in range(4)]
    for poly in env.obstacles:
        base = len(raw)
        raw.extend(poly)
        m = len(poly)
        segs_raw.extend((base + k, base + (k + 1) % m) for k in range(m))
    uniq, index = merge_points(raw)
    order = sorted(range(len(uniq)), key=lambda k: (uniq[k][0], uniq[k][1]))
    rank = {k: r for r, k in enumerate(order)}
    verts = [uniq[k] for k in order]
    segs = set()
    for a, b in segs_raw:
        u, v = rank[index[a]], rank[index[b]]
        if u == v:
            raise DegenerateInput("degenerate obstacle edge")
        segs.add((min(u, v), max(u, v)))

    tris, cons = triangulate(verts, segs)
    free = []
    for t in tris:
        cx = sum(_exact(verts[i][0]) for i in t) / 3
        cy = sum(_exact(verts[i][1]) for i in t) / 3
        if all(point_in_polygon((cx, cy), poly) != INSIDE for poly in env.obstacles):
            free.append(t)
    return Triangulation(vertices=verts, triangles=tris, constrained_edges=cons, free_triangles=free)


def triangle_area(points: Sequence[Point]) -> float:
    return abs(signed_area(points))


def circumcircle_violations(tri: Triangulation) -> list:
    """Brute-force empty-circumcircle check on unconstrained interior edges."""
    dedge = {}
    for a, b, c in tri.triangles:
        dedge[(a, b)] = c
        dedge[(b, c)] = a
        dedge[(c, a)] = b
    bad = []
    P = tri.vertices
    for (u, v), a in dedge.items():
        if u > v or (u, v) in tri.constrained_edges or (v, u) not in dedge:
            continue
        b = dedge[(v, u)]
        if incircle(P[u], P[v], P[a], P[b]) > 0 or incircle(P[v], P[u], P[b], P[a]) > 0:
            bad.append((u, v))
    return bad


