"""Free-space partition: faces over a shared, 1-based ground set."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import cdc
from .geometry import (OUTSIDE, Triangulation, convex_hull, convex_polygons_overlap, orient,
                       point_in_polygon, signed_area)


class InternalVertexViolation(ValueError):
    """A ground-set vertex lies in a face without being one of its corners."""


@dataclass(frozen=True)
class Rejection:
    reason: str  # obstacle-overlap | redundant-vertex | internal-vertex | not-ib-representable
    detail: tuple = ()

    def __bool__(self):
        return False


@dataclass
class FaceHalfspaces:
    A: np.ndarray  # (m, 2) outward unit normals
    b: np.ndarray  # (m,)

    @property
    def rows(self) -> list:
        return [(self.A[k].copy(), float(self.b[k])) for k in range(len(self.b))]

    def __len__(self):
        return len(self.b)


@dataclass
class Partition:
    """Faces are tuples of 1-based ground-set indices in CCW order.

    ``blocked`` holds the obstacle triangles (as point triples) and is only
    used to reject merges whose hull would cover an obstacle.
    """
    ground_set: list
    faces: list
    blocked: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.ground_set)

    @property
    def d(self) -> int:
        return len(self.faces)

    def point(self, v: int):
        return self.ground_set[v - 1]

    def face_points(self, i: int) -> list:
        return [self.point(v) for v in self.faces[i]]

    def face_area(self, i: int) -> float:
        return signed_area(self.face_points(i))

    def free_area(self) -> float:
        return sum(self.face_area(i) for i in range(self.d))

    def families(self) -> list:
        return [frozenset(f) for f in self.faces]

    def cdc(self) -> "cdc.CdcInstance":
        return cdc.CdcInstance(self.n, self.families())

    def face_edges(self, i: int) -> list:
        f = self.faces[i]
        return [(f[k], f[(k + 1) % len(f)]) for k in range(len(f))]

    def skeleton_edges(self) -> set:
        out = set()
        for i in range(self.d):
            for u, v in self.face_edges(i):
                out.add((min(u, v), max(u, v)))
        return out

    def adjacent(self, i: int, j: int) -> bool:
        ei = {frozenset(e) for e in self.face_edges(i)}
        return any(frozenset(e) in ei for e in self.face_edges(j))

    def locate(self, p) -> int:
        """Index of the first face containing p (closed), or -1."""
        for i in range(self.d):
            if point_in_polygon(p, self.face_points(i)) != OUTSIDE:
                return i
        return -1

    def to_json(self) -> dict:
        out = {"vertices": [list(map(float, v)) for v in self.ground_set],
               "faces": [list(f) for f in self.faces]}
        if self.blocked:
            out["blocked"] = [[list(map(float, q)) for q in t] for t in self.blocked]
        return out

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def from_json(cls, data: dict) -> "Partition":
        blocked = [tuple(tuple(q) for q in t) for t in data.get("blocked", [])]
        return cls([tuple(v) for v in data["vertices"]], [tuple(f) for f in data["faces"]], blocked)

    @classmethod
    def load(cls, path) -> "Partition":
        return cls.from_json(json.loads(Path(path).read_text()))


def internal_vertex_violations(p: Partition, faces=None) -> list:
    """(vertex, face) pairs breaking the internal-vertex condition."""
    bad = []
    items = range(p.d) if faces is None else faces
    for i in items:
        pts = p.face_points(i)
        members = set(p.faces[i])
        for v in range(1, p.n + 1):
            if v not in members and point_in_polygon(p.point(v), pts) != OUTSIDE:
                bad.append((v, i))
    return bad


def partition_from_cdt(tri: Triangulation) -> Partition:
    """One face per free triangle over the vertices they touch."""
    used = sorted({v for t in tri.free_triangles for v in t})
    # triangulation vertices are already lexicographic, so this keeps (x, y) order
    relabel = {v: k + 1 for k, v in enumerate(used)}
    faces = sorted(tuple(relabel[v] for v in t) for t in tri.free_triangles)
    faces = [_rotate_min(f) for f in faces]
    blocked = [tuple(tri.vertices[v] for v in t) for t in tri.obstacle_triangles]
    part = Partition([tri.vertices[v] for v in used], faces, blocked)
    bad = internal_vertex_violations(part)
    if bad:
        raise InternalVertexViolation(f"vertex {bad[0][0]} lies in face {bad[0][1]}")
    return part


def _rotate_min(f):
    k = f.index(min(f))
    return tuple(f[k:] + f[:k])


def face_halfspaces(p: Partition, i: int) -> FaceHalfspaces:
    """One row per edge: outward unit normal a and offset b with a.x <= b."""
    pts = np.asarray(p.face_points(i), dtype=float)
    nxt = np.roll(pts, -1, axis=0)
    d = nxt - pts
    normals = np.column_stack([d[:, 1], -d[:, 0]])
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    b = np.einsum("ij,ij->i", normals, pts)
    return FaceHalfspaces(normals, b)


def all_halfspaces(p: Partition) -> list:
    return [face_halfspaces(p, i) for i in range(p.d)]


def merge_faces(p: Partition, i: int, j: int):
    """Replace faces i and j by their convex hull, or return a Rejection."""
    if i == j or not p.adjacent(i, j):
        raise ValueError(f"faces {i} and {j} do not share an edge")
    verts = sorted(set(p.faces[i]) | set(p.faces[j]))
    pts = [p.point(v) for v in verts]
    hull_idx = convex_hull(pts)
    hull = [verts[k] for k in hull_idx]
    hull_pts = [p.point(v) for v in hull]

    for tri in p.blocked:
        t = list(tri)
        if signed_area(t) < 0:
            t = t[::-1]
        if convex_polygons_overlap(hull_pts, t):
            return Rejection("obstacle-overlap", tuple(map(tuple, t)))

    inner = [v for v in verts if v not in hull]
    for v in inner:
        if point_in_polygon(p.point(v), hull_pts) == "inside":
            return Rejection("redundant-vertex", (v,))
    hull_set = set(hull)
    for v in range(1, p.n + 1):
        if v not in hull_set and point_in_polygon(p.point(v), hull_pts) != OUTSIDE:
            return Rejection("internal-vertex", (v,))

    merged = _rotate_min(tuple(hull))
    faces = [f for k, f in enumerate(p.faces) if k not in (i, j)]
    faces.insert(min(i, j), merged)
    out = replace(p, faces=faces)
    ok, witness = cdc.is_pairwise_ib_representable(out.cdc())
    if not ok:
        return Rejection("not-ib-representable", witness)
    return out


def merge_all(p: Partition) -> Partition:
    """Greedy sweep over adjacent face pairs in index order until no merge succeeds."""
    changed = True
    while changed:
        changed = False
        for i in range(p.d):
            for j in range(i + 1, p.d):
                if not p.adjacent(i, j):
                    continue
                res = merge_faces(p, i, j)
                if isinstance(res, Partition):
                    p = res
                    changed = True
                    break
            if changed:
                break
    return p


def is_convex_position(points) -> bool:
    n = len(points)
    return all(orient(points[k], points[(k + 1) % n], points[(k + 2) % n]) > 0 for k in range(n))
