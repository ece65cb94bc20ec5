"""Combinatorial disjunctive constraints: feasibility, conflict graph, IB checks."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class CdcInstance:
    """Ground set {1..n} and the family of allowed supports."""
    n: int
    families: tuple

    def __init__(self, n: int, families):
        fams = tuple(frozenset(int(v) for v in f) for f in families)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "families", fams)
        for f in fams:
            if not f or min(f) < 1 or max(f) > n:
                raise ValueError(f"family {sorted(f)} outside 1..{n}")
        covered = set().union(*fams) if fams else set()
        if covered != set(range(1, n + 1)):
            raise ValueError("every ground-set index must appear in some family")
        for a, b in combinations(fams, 2):
            if a <= b or b <= a:
                raise ValueError("family is redundant")

    def incidence(self) -> np.ndarray:
        """(d, n) uint8 matrix, column v-1 for index v."""
        M = np.zeros((len(self.families), self.n), dtype=np.uint8)
        for k, f in enumerate(self.families):
            M[k, [v - 1 for v in f]] = 1
        return M

    def pair_feasible(self) -> np.ndarray:
        M = self.incidence().astype(np.int64)
        return (M.T @ M) > 0


def is_feasible(c: CdcInstance, T) -> bool:
    T = set(T)
    return any(T <= f for f in c.families)


@dataclass
class ConflictGraph:
    n: int
    edges: set  # (u, v) with u < v, 1-based

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges:
            A[u - 1, v - 1] = A[v - 1, u - 1] = True
        return A

    def neighbors(self, v: int) -> set:
        return {b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v}

    def complement_edges(self) -> set:
        return {(u, v) for u in range(1, self.n + 1) for v in range(u + 1, self.n + 1)
                if (u, v) not in self.edges}

    def dump(self, path) -> None:
        lines = [f"{u} {v}" for u, v in sorted(self.edges)]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path, n: int) -> "ConflictGraph":
        edges = set()
        for line in Path(path).read_text().splitlines():
            if line.strip():
                u, v = map(int, line.split())
                edges.add((min(u, v), max(u, v)))
        return cls(n, edges)


def conflict_graph(c: CdcInstance) -> ConflictGraph:
    ok = c.pair_feasible()
    iu, iv = np.nonzero(np.triu(~ok, k=1))
    return ConflictGraph(c.n, {(int(u) + 1, int(v) + 1) for u, v in zip(iu, iv)})


def is_pairwise_ib_representable(c: CdcInstance):
    """(True, None) or (False, witness) where the witness is a minimal infeasible triple."""
    ok = c.pair_feasible()
    np.fill_diagonal(ok, False)
    u, v, w = _kernels.ACTIVE.minimal_infeasible_triplet(ok, c.incidence())
    if u < 0:
        return True, None
    return False, (int(u) + 1, int(v) + 1, int(w) + 1)


def ib_feasible(cover, T) -> bool:
    """T survives every level: it avoids A^j or avoids B^j."""
    T = set(T)
    return all(not (T & set(A)) or not (T & set(B)) for A, B in cover.levels)


def level_matrices(cover, n: int):
    A = np.zeros((len(cover.levels), n), dtype=np.uint8)
    B = np.zeros_like(A)
    for j, (a, b) in enumerate(cover.levels):
        A[j, [v - 1 for v in a]] = 1
        B[j, [v - 1 for v in b]] = 1
    return A, B


def oracle_mismatches(c: CdcInstance, cover) -> int:
    """Exhaustive count of subsets with |T| <= 3 where the two feasibility tests differ,
    plus any family member the cover would forbid."""
    A, B = level_matrices(cover, c.n)
    count = int(_kernels.ACTIVE.oracle_mismatches(c.incidence(), A, B))
    count += sum(not ib_feasible(cover, S) for S in c.families)
    return count
