"""Separator-driven biclique covers of conflict graphs.

The feasible-pair graph of a planar partition is a finite element graph: take
the planar skeleton (face boundaries) and turn every element (free face) into
a clique.  Its vertex separators (A, B, C) give bicliques A x B of the conflict
graph, and recursing on A+C and B+C covers everything else.
"""
from __future__ import annotations

import json
import math
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cdc import ConflictGraph


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparatorResult:
    A: frozenset
    B: frozenset
    C: frozenset


@dataclass
class BicliqueCover:
    levels: list = field(default_factory=list)  # [(A, B)] of sorted tuples

    def __post_init__(self):
        self.levels = [(tuple(sorted(a)), tuple(sorted(b))) for a, b in self.levels]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def to_table(self) -> str:
        rows = ["Level | A | B"]
        for j, (a, b) in enumerate(self.levels, 1):
            rows.append(f"{j} | {{{', '.join(map(str, a))}}} | {{{', '.join(map(str, b))}}}")
        return "\n".join(rows) + "\n"

    @classmethod
    def from_table(cls, text: str) -> "BicliqueCover":
        levels = []
        for line in text.splitlines():
            parts = [s.strip() for s in line.split("|")]
            if len(parts) != 3 or not parts[0].isdigit():
                continue
            sets = [tuple(int(x) for x in re.findall(r"\d+", s)) for s in parts[1:]]
            levels.append((sets[0], sets[1]))
        return cls(levels)

    def to_json(self) -> dict:
        return {"depth": self.depth,
                "levels": [{"A": list(a), "B": list(b)} for a, b in self.levels]}

    @classmethod
    def from_json(cls, data: dict) -> "BicliqueCover":
        return cls([(lv["A"], lv["B"]) for lv in data["levels"]])

    def dump(self, path) -> None:
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(json.dumps(self.to_json(), indent=1) + "\n")
        else:
            path.write_text(self.to_table())

    @classmethod
    def load(cls, path) -> "BicliqueCover":
        path = Path(path)
        if path.suffix == ".json":
            return cls.from_json(json.loads(path.read_text()))
        return cls.from_table(path.read_text())


@dataclass
class FiniteElementGraph:
    """Planar skeleton plus elements completed into cliques.

    ``coords`` (vertex -> point) fixes a straight-line embedding of the
    skeleton; without it only BFS-level separators are available.
    """
    vertices: list
    edges: set
    elements: list
    skeleton: set = None
    coords: dict = None

    def __post_init__(self):
        self.vertices = sorted(self.vertices)
        self.edges = {(min(u, v), max(u, v)) for u, v in self.edges}
        if self.skeleton is None:
            sk = set()
            for el in self.elements:
                for a, b in zip(el, el[1:] + el[:1]):
                    if a != b:
                        sk.add((min(a, b), max(a, b)))
            self.skeleton = sk
        self._adj = None

    @classmethod
    def from_elements(cls, vertices, elements, coords=None):
        edges = set()
        for el in elements:
            for i in range(len(el)):
                for j in range(i + 1, len(el)):
                    edges.add((min(el[i], el[j]), max(el[i], el[j])))
        return cls(list(vertices), edges, [tuple(e) for e in elements], coords=coords)

    @classmethod
    def from_partition(cls, p) -> "FiniteElementGraph":
        coords = {v: p.point(v) for v in range(1, p.n + 1)}
        return cls.from_elements(range(1, p.n + 1), p.faces, coords)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def k(self) -> int:
        return max((len(e) for e in self.elements), default=0)

    def adj(self) -> dict:
        if self._adj is None:
            a = {v: set() for v in self.vertices}
            for u, v in self.edges:
                a[u].add(v)
                a[v].add(u)
            self._adj = a
        return self._adj

    def induced(self, keep) -> "FiniteElementGraph":
        keep = set(keep)
        els = []
        seen = set()
        for el in self.elements:
            sub = tuple(v for v in el if v in keep)
            if len(sub) >= 2 and sub not in seen:
                seen.add(sub)
                els.append(sub)
        g = FiniteElementGraph(
            sorted(keep),
            {e for e in self.edges if e[0] in keep and e[1] in keep},
            els,
            skeleton={e for e in self.skeleton if e[0] in keep and e[1] in keep},
            coords=self.coords,
        )
        return g

    def is_complete(self) -> bool:
        n = self.n
        return len(self.edges) == n * (n - 1) // 2

    def components(self) -> list:
        adj = self.adj()
        seen = set()
        comps = []
        for s in self.vertices:
            if s in seen:
                continue
            comp = {s}
            seen.add(s)
            dq = deque([s])
            while dq:
                u = dq.popleft()
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        comp.add(w)
                        dq.append(w)
            comps.append(frozenset(comp))
        return comps


def separator_bounds(n: int, k: int) -> tuple:
    """(max |A|, max |B|) and max |C| for an n-vertex graph with elements of size <= k."""
    return math.ceil(2 * n / 3), 4 * (k // 2) * math.sqrt(n)


def separator_ok(res: SeparatorResult, n: int, k: int) -> bool:
    ab, c = separator_bounds(n, k)
    return len(res.A) <= ab and len(res.B) <= ab and len(res.C) <= c + 1e-9


@dataclass
class SeparatorLog:
    """Per-invocation record: (n, k, |A|, |B|, |C|, bounds satisfied)."""
    calls: list = field(default_factory=list)

    def record(self, g: FiniteElementGraph, res: SeparatorResult):
        self.calls.append((g.n, g.k, len(res.A), len(res.B), len(res.C),
                           separator_ok(res, g.n, g.k)))

    @property
    def all_ok(self) -> bool:
        return all(c[-1] for c in self.calls)


# ---------------------------------------------------------------------------
# separator
# ---------------------------------------------------------------------------

def _bfs_levels(adj, root, allowed=None):
    dist = {root: 0}
    levels = [[root]]
    dq = deque([root])
    while dq:
        u = dq.popleft()
        for w in sorted(adj[u]):
            if w not in dist and (allowed is None or w in allowed):
                dist[w] = dist[u] + 1
                if dist[w] == len(levels):
                    levels.append([])
                levels[dist[w]].append(w)
                dq.append(w)
    return levels


def _level_candidates(g: FiniteElementGraph, roots):
    """Yield (key, root, i, j) for single (j is None) and double level cuts."""
    adj = g.adj()
    n = g.n
    ab_max, c_max = separator_bounds(n, g.k)
    best = None
    for r in roots:
        levels = _bfs_levels(adj, r)
        sizes = [len(L) for L in levels]
        reached = sum(sizes)
        rest = n - reached  # other components can go on either side
        pref = np.concatenate([[0], np.cumsum(sizes)])
        h = len(levels)
        for i in range(1, h):
            a = int(pref[i])
            b = reached - int(pref[i + 1])
            c = sizes[i]
            a2, b2 = (a + rest, b) if a <= b else (a, b + rest)
            if a2 and b2 and c <= c_max + 1e-9 and max(a2, b2) <= ab_max:
                key = (c, max(a2, b2), r, i, -1)
                if best is None or key < best[0]:
                    best = (key, r, i, None)
        for i in range(0, h):
            for j in range(i + 2, h):
                c = sizes[i] + sizes[j]
                if c > c_max + 1e-9:
                    continue
                mid = int(pref[j] - pref[i + 1])
                out = reached - mid - c
                a2, b2 = (mid + rest, out) if mid <= out else (mid, out + rest)
                if a2 and b2 and max(a2, b2) <= ab_max:
                    key = (c, max(a2, b2), r, i, j)
                    if best is None or key < best[0]:
                        best = (key, r, i, j)
    return best


def _materialize_levels(g, r, i, j):
    levels = _bfs_levels(g.adj(), r)
    reached = set().union(*map(set, levels))
    rest = set(g.vertices) - reached
    if j is None:
        A = set().union(*map(set, levels[:i])) if i else set()
        C = set(levels[i])
        B = set().union(*map(set, levels[i + 1:])) if i + 1 < len(levels) else set()
    else:
        C = set(levels[i]) | set(levels[j])
        A = set().union(*map(set, levels[i + 1:j]))
        B = reached - A - C
    if len(A) <= len(B):
        A |= rest
    else:
        B |= rest
    return A, B, C


def _rotation_system(g: FiniteElementGraph):
    rot = {v: [] for v in g.vertices}
    for u, v in g.skeleton:
        rot[u].append(v)
        rot[v].append(u)
    for v, nb in rot.items():
        x0, y0 = map(float, g.coords[v])
        nb.sort(key=lambda w: math.atan2(float(g.coords[w][1]) - y0, float(g.coords[w][0]) - x0))
    return rot


def _face_walks(rot):
    pos = {v: {w: k for k, w in enumerate(nb)} for v, nb in rot.items()}
    used = set()
    walks = []
    for u in sorted(rot):
        for v in rot[u]:
            if (u, v) in used:
                continue
            walk = []
            a, b = u, v
            while (a, b) not in used:
                used.add((a, b))
                walk.append((a, b))
                nb = rot[b]
                c = nb[(pos[b][a] - 1) % len(nb)]
                a, b = b, c
            walks.append(walk)
    return walks


def _cycle_candidates(g: FiniteElementGraph, max_roots: int = 12):
    """Fundamental-cycle separators of the skeleton with one hub node per face.

    Every face of the skeleton gets a hub joined to each corner, which makes
    the auxiliary graph a triangulated planar map.  A fundamental cycle of a
    BFS tree there is a Jordan curve; real vertices strictly on either side
    form A and B and the real vertices on the curve form C.
    """
    if not g.coords or not g.skeleton:
        return []
    rot = _rotation_system(g)
    walks = _face_walks(rot)
    # triangles: (face, position) with sides ('E', u, v), ('S', f, i), ('S', f, i+1)
    tri_of_dedge = {}
    for f, walk in enumerate(walks):
        for i, (a, b) in enumerate(walk):
            tri_of_dedge[(a, b)] = (f, i)
    # auxiliary graph adjacency: node ids are ('v', x) and ('f', f)
    hadj = {("v", v): [] for v in g.vertices}
    for f, walk in enumerate(walks):
        hadj[("f", f)] = []
        for i, (a, _) in enumerate(walk):
            eid = ("S", f, i)
            hadj[("f", f)].append((("v", a), eid))
            hadj[("v", a)].append((("f", f), eid))
    for u, v in sorted(g.skeleton):
        eid = ("E", u, v)
        hadj[("v", u)].append((("v", v), eid))
        hadj[("v", v)].append((("v", u), eid))

    def tri_sides(t):
        f, i = t
        a, b = walks[f][i]
        m = len(walks[f])
        return [("E", min(a, b), max(a, b)), ("S", f, i), ("S", f, (i + 1) % m)]

    def across(t, side):
        f, i = t
        if side[0] == "S":
            m = len(walks[f])
            j = side[2]
            return (f, (j - 1) % m) if j == i else (f, j)
        a, b = walks[f][i]
        return tri_of_dedge[(b, a)]

    def side_tris(eid):
        if eid[0] == "S":
            _, f, j = eid
            m = len(walks[f])
            return (f, (j - 1) % m), (f, j)
        _, u, v = eid
        return tri_of_dedge[(u, v)], tri_of_dedge[(v, u)]

    n = g.n
    ab_max, c_max = separator_bounds(n, g.k)
    adj = g.adj()
    step = max(1, n // max_roots)
    roots = g.vertices[::step][:max_roots]
    best = None
    for r in roots:
        root = ("v", r)
        parent = {root: None}
        depth = {root: 0}
        dq = deque([root])
        tree = set()
        while dq:
            x = dq.popleft()
            for y, eid in hadj[x]:
                if y not in parent:
                    parent[y] = (x, eid)
                    depth[y] = depth[x] + 1
                    tree.add(eid)
                    dq.append(y)
        nontree = []
        seen_e = set()
        for x in hadj:
            for y, eid in hadj[x]:
                if eid not in tree and eid not in seen_e and x in parent and y in parent:
                    seen_e.add(eid)
                    nontree.append((x, y, eid))
        for x, y, eid in nontree:
            cyc_nodes = set()
            cyc_edges = {eid}
            a, b = x, y
            while a != b:
                if depth[a] >= depth[b]:
                    cyc_nodes.add(a)
                    p, e = parent[a]
                    cyc_edges.add(e)
                    a = p
                else:
                    cyc_nodes.add(b)
                    p, e = parent[b]
                    cyc_edges.add(e)
                    b = p
            cyc_nodes.add(a)
            C = {v for kind, v in cyc_nodes if kind == "v"}
            if len(C) > c_max + 1e-9:
                continue
            start = side_tris(eid)[0]
            region = {start}
            stack = [start]
            while stack:
                t = stack.pop()
                for s in tri_sides(t):
                    if s in cyc_edges:
                        continue
                    u = across(t, s)
                    if u not in region:
                        region.add(u)
                        stack.append(u)
            inside = set()
            for f, i in region:
                a_, b_ = walks[f][i]
                inside.add(a_)
                inside.add(b_)
            A = inside - C
            B = set(g.vertices) - A - C
            # elements straddling the curve: pull the smaller side into C
            for u in sorted(A):
                bad = adj[u] & B
                if not bad:
                    continue
                if len(bad) == 1:
                    B -= bad
                    C |= bad
                else:
                    A.discard(u)
                    C.add(u)
            if not A or not B:
                continue
            if len(C) > c_max + 1e-9 or max(len(A), len(B)) > ab_max:
                continue
            key = (len(C), max(len(A), len(B)), r, sorted(C))
            if best is None or key < best[0]:
                best = (key, (A, B, C))
    return [best[1]] if best else []


def _postprocess(adj, A, B, C):
    """Make both sides nonempty while keeping A and B non-adjacent."""
    A, B, C = set(A), set(B), set(C)
    if not A and not B:
        for u in sorted(C, key=lambda v: (len(adj[v] & C), v)):
            if len(adj[u] & C) < len(C) - 1:
                A.add(u)
                C.discard(u)
                break
        else:
            return None
    if not A or not B:
        full, empty = (A, B) if A else (B, A)
        movable = [c for c in C if not (adj[c] & full)]
        if not movable:
            return None
        c = min(movable, key=lambda v: (len(adj[v] & full), len(adj[v]), v))
        empty.add(c)
        C.discard(c)
    return A, B, C


def _shrink_c(adj, A, B, C, ab_max):
    """Move C-vertices with no neighbour across to the side they touch."""
    for c in sorted(C):
        if not (adj[c] & B) and len(A) < ab_max:
            A.add(c)
            C.discard(c)
        elif not (adj[c] & A) and len(B) < ab_max:
            B.add(c)
            C.discard(c)
    return A, B, C


def separator(g: FiniteElementGraph, log: SeparatorLog | None = None,
              max_level_roots: int = 24) -> SeparatorResult:
    """Balanced vertex separator (A, B, C) of a non-complete finite element graph.

    Tries BFS-level cuts (one or two levels) from several roots; if none meets
    the size bounds and an embedding is known, fundamental cycles of the
    face-augmented skeleton are tried next.  The smallest valid C wins.
    """
    adj = g.adj()
    n = g.n
    ab_max, c_max = separator_bounds(n, g.k)
    step = max(1, n // max_level_roots)
    roots = g.vertices[::step]
    chosen = None
    hit = _level_candidates(g, roots)
    if hit is not None:
        _, r, i, j = hit
        chosen = _materialize_levels(g, r, i, j)
    else:
        if len(roots) < n:
            hit = _level_candidates(g, g.vertices)
            if hit is not None:
                _, r, i, j = hit
                chosen = _materialize_levels(g, r, i, j)
        if chosen is None:
            cyc = _cycle_candidates(g)
            if cyc:
                chosen = cyc[0]
    if chosen is None:
        # nothing meets the bounds: fall back to a neighbourhood cut
        u = min(g.vertices, key=lambda v: (len(adj[v]), v))
        chosen = ({u}, set(g.vertices) - adj[u] - {u}, set(adj[u]))
    A, B, C = chosen
    fixed = _postprocess(adj, A, B, C)
    if fixed is None:
        u = min((v for v in g.vertices if len(adj[v]) < n - 1), key=lambda v: (len(adj[v]), v))
        fixed = ({u}, set(g.vertices) - adj[u] - {u}, set(adj[u]))
    A, B, C = _shrink_c(adj, *fixed, ab_max)
    res = SeparatorResult(frozenset(A), frozenset(B), frozenset(C))
    if log is not None:
        log.record(g, res)
    return res


# ---------------------------------------------------------------------------
# covers
# ---------------------------------------------------------------------------

def _conflict_of(g: FiniteElementGraph) -> ConflictGraph:
    n = max(g.vertices) if g.vertices else 0
    verts = g.vertices
    edges = {(u, v) for ii, u in enumerate(verts) for v in verts[ii + 1:] if (u, v) not in g.edges}
    return ConflictGraph(n, edges)


def biclique_cover(g: FiniteElementGraph, log: SeparatorLog | None = None,
                   conflict: ConflictGraph | None = None) -> BicliqueCover:
    """Divide-and-conquer cover of the complement of ``g``."""
    levels = []
    seen = set()
    stack = [frozenset(g.vertices)]
    while stack:
        vs = stack.pop()
        if vs in seen:
            continue
        seen.add(vs)
        sub = g.induced(vs)
        if sub.is_complete():
            continue
        comps = sub.components()
        if len(comps) > 1:
            A, B = set(), set()
            for comp in sorted(comps, key=lambda c: (-len(c), min(c))):
                (A if len(A) <= len(B) else B).update(comp)
            levels.append((A, B))
            stack.append(frozenset(B))
            stack.append(frozenset(A))
            continue
        sep = separator(sub, log)
        levels.append((sep.A, sep.B))
        stack.append(sep.B | sep.C)
        stack.append(sep.A | sep.C)

    cover = BicliqueCover(_dedupe(levels))
    conflict = conflict if conflict is not None else _conflict_of(g)
    missing = uncovered_edges(cover, conflict)
    if missing:
        extra = trivial_cover(ConflictGraph(conflict.n, missing))
        cover = merge_cover(BicliqueCover(cover.levels + extra.levels), conflict)
    return cover


def _dedupe(levels):
    out = []
    seen = set()
    for a, b in levels:
        key = frozenset((frozenset(a), frozenset(b)))
        if key in seen or not a or not b:
            continue
        seen.add(key)
        out.append((a, b))
    return out


def trivial_cover(conflict: ConflictGraph) -> BicliqueCover:
    adj = {v: set() for v in range(1, conflict.n + 1)}
    for u, v in conflict.edges:
        adj[u].add(v)
        adj[v].add(u)
    return BicliqueCover(_dedupe([({v}, adj[v]) for v in range(1, conflict.n + 1) if adj[v]]))


def covered_matrix(cover: BicliqueCover, n: int) -> np.ndarray:
    M = np.zeros((n, n), dtype=bool)
    for a, b in cover.levels:
        ia = np.asarray(a, dtype=int) - 1
        ib = np.asarray(b, dtype=int) - 1
        M[np.ix_(ia, ib)] = True
        M[np.ix_(ib, ia)] = True
    return M


def uncovered_edges(cover: BicliqueCover, conflict: ConflictGraph) -> set:
    M = covered_matrix(cover, conflict.n)
    return {(u, v) for u, v in conflict.edges if not M[u - 1, v - 1]}


@dataclass
class CoverCheck:
    ok: bool
    problem: str = ""
    detail: tuple = ()

    def __bool__(self):
        return self.ok


def validate_cover(cover: BicliqueCover, conflict: ConflictGraph) -> CoverCheck:
    adj = conflict.adjacency()
    n = conflict.n
    for j, (a, b) in enumerate(cover.levels, 1):
        if not a or not b:
            return CoverCheck(False, "empty side", (j,))
        if set(a) & set(b):
            return CoverCheck(False, "overlap", (j, min(set(a) & set(b))))
        for v in (*a, *b):
            if not 1 <= v <= n:
                return CoverCheck(False, "unknown vertex", (j, v))
        sub = adj[np.ix_(np.asarray(a) - 1, np.asarray(b) - 1)]
        if not sub.all():
            x, y = np.argwhere(~sub)[0]
            return CoverCheck(False, "non-edge", (j, a[x], b[y]))
    missing = uncovered_edges(cover, conflict)
    if missing:
        return CoverCheck(False, "uncovered edge", min(missing))
    return CoverCheck(True)


def _is_biclique(adj, a, b):
    if set(a) & set(b):
        return False
    return bool(adj[np.ix_(np.asarray(sorted(a)) - 1, np.asarray(sorted(b)) - 1)].all())


def merge_cover(cover: BicliqueCover, conflict: ConflictGraph) -> BicliqueCover:
    """Greedy pairwise merging of levels until no pair combines into a biclique."""
    adj = conflict.adjacency()
    levels = [(frozenset(a), frozenset(b)) for a, b in cover.levels]
    levels.sort(key=lambda ab: (-(len(ab[0]) + len(ab[1])), sorted(ab[0]), sorted(ab[1])))
    changed = True
    while changed:
        changed = False
        for i in range(len(levels)):
            ai, bi = levels[i]
            for j in range(i + 1, len(levels)):
                aj, bj = levels[j]
                for na, nb in ((ai | aj, bi | bj), (ai | bj, bi | aj)):
                    if _is_biclique(adj, na, nb):
                        levels[i] = (na, nb)
                        del levels[j]
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    return BicliqueCover(levels)


def cover_from_partition(p, log: SeparatorLog | None = None):
    """(original cover, merged cover, conflict graph) for a partition."""
    from .cdc import conflict_graph
    conflict = conflict_graph(p.cdc())
    g = FiniteElementGraph.from_partition(p)
    original = biclique_cover(g, log, conflict)
    return original, merge_cover(original, conflict), conflict
