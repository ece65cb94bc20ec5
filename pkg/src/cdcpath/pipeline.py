"""End-to-end pipeline per scenario and the benchmark harness."""
from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .biclique import SeparatorLog, cover_from_partition
from .cdc import is_pairwise_ib_representable
from .formulation import FootstepParams, expected_assign_counts, footstep_model
from .geometry import constrained_delaunay
from .partition import merge_all, partition_from_cdt
from .scenarios import gen_env
from .solver import solve_milp

METHODS = ("ib", "ib-orig", "bigm")


@dataclass
class BenchRecord:
    scenario: int
    obstacles: int
    method: str
    status: str
    objective: float | None
    nodes: int
    solve_seconds: float
    binaries: int
    continuous: int
    inequalities: int
    equalities: int
    depth_original: int | None
    depth_merged: int | None
    vertices: int
    free_faces: int
    halfspaces: int

    # wall time is kept out of the CSV so repeated runs compare byte for byte
    CSV_FIELDS = ("scenario", "obstacles", "method", "status", "objective", "nodes",
                  "binaries", "continuous", "inequalities", "equalities",
                  "depth_original", "depth_merged", "vertices", "free_faces", "halfspaces")

    def csv_row(self) -> list:
        out = []
        for name in self.CSV_FIELDS:
            v = getattr(self, name)
            if v is None:
                v = ""
            elif isinstance(v, float):
                v = f"{v:.9f}"
            out.append(v)
        return out


@dataclass
class PipelineArtifacts:
    env: object
    triangulation: object
    partition: object
    conflict: object = None
    cover_original: object = None
    cover_merged: object = None
    separator_log: SeparatorLog = field(default_factory=SeparatorLog)
    model: object = None
    result: object = None


def prepare(env, merge_faces: bool = False) -> PipelineArtifacts:
    tri = constrained_delaunay(env)
    p = partition_from_cdt(tri)
    if merge_faces:
        p = merge_all(p)
    art = PipelineArtifacts(env, tri, p)
    ok, _ = is_pairwise_ib_representable(p.cdc())
    if ok:
        orig, merged, conflict = cover_from_partition(p, art.separator_log)
        art.conflict, art.cover_original, art.cover_merged = conflict, orig, merged
    return art


def run_pipeline(env, method: str, params: FootstepParams | None = None,
                 merge_faces: bool = False, time_limit: float = 300.0,
                 node_limit: int | None = None, scenario: int | None = None,
                 art: PipelineArtifacts | None = None):
    """CDT, partition, cover or big-M data, footstep model and solve; returns (record, artifacts)."""
    params = replace(params or FootstepParams(), method=method)
    if art is None:
        art = prepare(env, merge_faces)
    p = art.partition
    cover = {"ib": art.cover_merged, "ib-orig": art.cover_original}.get(method)
    depths = (art.cover_original.depth if art.cover_original else None,
              art.cover_merged.depth if art.cover_merged else None)
    base = dict(
        scenario=env.seed if scenario is None else scenario,
        obstacles=len(env.obstacles), method=method,
        depth_original=depths[0], depth_merged=depths[1],
        vertices=p.n, free_faces=p.d, halfspaces=sum(len(f) for f in p.faces),
    )
    if method != "bigm" and cover is None:
        rec = BenchRecord(status="not-ib-representable", objective=None, nodes=0,
                          solve_seconds=0.0, binaries=0, continuous=0, inequalities=0,
                          equalities=0, **base)
        return rec, art
    model = footstep_model(env, p, params, cover=cover)
    res = solve_milp(model, time_limit=time_limit, node_limit=node_limit)
    art.model, art.result = model, res
    counts = model.summary("assign")
    expected = expected_assign_counts(method, params.n_steps, p, cover)
    if counts != expected:
        raise AssertionError(f"size accounting mismatch {counts} != {expected}")
    rec = BenchRecord(status=res.status,
                      objective=None if res.x is None else round(res.objective, 9),
                      nodes=res.nodes, solve_seconds=res.wall_time, **counts, **base)
    return rec, art


def _bench_one(job):
    seed, k, methods, params, merge_faces, time_limit, node_limit = job
    env = gen_env(seed, k)
    art = prepare(env, merge_faces)
    return [run_pipeline(env, m, params, merge_faces, time_limit, node_limit,
                         scenario=seed, art=art)[0] for m in methods]


def bench(seeds, obstacle_counts=(1, 2, 3), methods=METHODS, params: FootstepParams | None = None,
          merge_faces: bool = False, time_limit: float = 300.0, node_limit: int | None = None,
          jobs: int = 1, progress=None) -> list:
    params = params or FootstepParams()
    work = [(s, k, tuple(methods), params, merge_faces, time_limit, node_limit)
            for k in obstacle_counts for s in seeds]
    records = []
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            for recs in pool.map(_bench_one, work):
                records += recs
                if progress:
                    progress(recs)
    else:
        for job in work:
            recs = _bench_one(job)
            records += recs
            if progress:
                progress(recs)
    order = {m: i for i, m in enumerate(METHODS)}
    records.sort(key=lambda r: (r.obstacles, r.scenario, order.get(r.method, 99)))
    return records


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BenchRecord.CSV_FIELDS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def timings_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scenario", "obstacles", "method", "solve_seconds"))
    for r in records:
        w.writerow((r.scenario, r.obstacles, r.method, f"{r.solve_seconds:.6f}"))
    return buf.getvalue()


def _mean(xs):
    return statistics.fmean(xs) if xs else float("nan")


def _std(xs):
    return statistics.pstdev(xs) if len(xs) > 1 else 0.0


def _table(title, header, rows) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    fmt = "  ".join(f"{{:<{w}}}" if i == 0 else f"{{:>{w}}}" for i, w in enumerate(widths))
    lines = [title, fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*r) for r in rows]
    return "\n".join(lines)


def solve_table(records, n_obstacles: int, methods=METHODS) -> str:
    """Per-method solve statistics for one obstacle count."""
    recs = [r for r in records if r.obstacles == n_obstacles]
    by = {m: [r for r in recs if r.method == m] for m in methods}
    fastest = {m: 0 for m in methods}
    for s in sorted({r.scenario for r in recs}):
        done = [r for r in recs if r.scenario == s and r.status == "optimal"]
        if done:
            fastest[min(done, key=lambda r: (r.solve_seconds, methods.index(r.method))).method] += 1
    rows = [
        ("Fastest", *(fastest[m] for m in methods)),
        ("Timeouts", *(sum(r.status in ("time-limit", "node-limit") for r in by[m]) for m in methods)),
    ]
    for label, fn in (("Solve Time Avg", _mean), ("Solve Time Std", _std)):
        rows.append((label, *(f"{fn([r.solve_seconds for r in by[m] if r.status == 'optimal']):.2f}"
                              for m in methods)))
    for label, key in (("Binary Var.", "binaries"), ("Cont. Var.", "continuous"),
                       ("Inequalities", "inequalities")):
        rows.append((label, *(f"{_mean([getattr(r, key) for r in by[m] if r.binaries]):.2f}"
                              for m in methods)))
    return _table(f"{n_obstacles} obstacle(s)", ("", *methods), rows)


def cover_table(records, obstacle_counts=(1, 2, 3)) -> str:
    """Partition and cover statistics per obstacle count, one scenario per row."""
    cols = []
    for k in obstacle_counts:
        seen = {}
        for r in records:
            if r.obstacles == k and r.scenario not in seen:
                seen[r.scenario] = r
        cols.append(list(seen.values()))

    def stat(rs, fn):
        vals = [fn(r) for r in rs]
        vals = [v for v in vals if v is not None]
        return f"{_mean(vals):.2f}"

    def red(r):
        if not r.depth_original:
            return None
        return 100.0 * (1.0 - r.depth_merged / r.depth_original)

    rows = [
        ("Vertices", *(stat(c, lambda r: r.vertices) for c in cols)),
        ("B.C. Original", *(stat(c, lambda r: r.depth_original) for c in cols)),
        ("B.C. Merged", *(stat(c, lambda r: r.depth_merged) for c in cols)),
        ("B.C. Reduction (%)", *(stat(c, red) for c in cols)),
        ("Free Faces", *(stat(c, lambda r: r.free_faces) for c in cols)),
        ("F.F. Halfspaces", *(stat(c, lambda r: r.halfspaces) for c in cols)),
    ]
    return _table("Partition and cover statistics", ("", *(f"{k} obst." for k in obstacle_counts)), rows)


def write_bench(records, out_dir, obstacle_counts=(1, 2, 3), methods=METHODS) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "bench.csv", "timings": out / "timings.csv", "tables": out / "tables.txt"}
    paths["csv"].write_text(records_csv(records))
    paths["timings"].write_text(timings_csv(records))
    ks = [k for k in obstacle_counts if any(r.obstacles == k for r in records)]
    parts = [solve_table(records, k, tuple(methods)) for k in ks]
    parts.append(cover_table(records, tuple(ks)))
    paths["tables"].write_text("\n\n".join(parts) + "\n")
    return paths
