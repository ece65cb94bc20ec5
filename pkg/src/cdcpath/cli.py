"""Command-line entry point: ``cdcpath <command> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import _kernels
from .biclique import FiniteElementGraph, SeparatorLog, separator, validate_cover
from .cdc import conflict_graph, is_pairwise_ib_representable
from .formulation import FootstepParams, footstep_model, step_positions, trimmed_steps
from .geometry import Environment, constrained_delaunay
from .lpfile import export_lp, read_lp
from .pipeline import METHODS, bench, prepare, write_bench
from .plotting import (plot_conflict, plot_partition, plot_separator, plot_solution,
                       plot_triangulation)
from .scenarios import gen_env
from .solver import UnsupportedModel, solve_milp


def _env(args) -> Environment:
    if getattr(args, "env", None):
        return Environment.load(args.env)
    return gen_env(args.seed, args.obstacles)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _params(args) -> FootstepParams:
    return FootstepParams(n_steps=args.steps, method=args.method, objective=args.objective)


def _model(args):
    env = _env(args)
    art = prepare(env, args.merge_faces)
    cover = {"ib": art.cover_merged, "ib-orig": art.cover_original}.get(args.method)
    if args.method != "bigm" and cover is None:
        ok, witness = is_pairwise_ib_representable(art.partition.cdc())
        raise SystemExit(f"partition is not pairwise IB-representable (witness {witness}); "
                         f"use --method bigm")
    return env, art, footstep_model(env, art.partition, _params(args), cover=cover)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_env(args):
    env = gen_env(args.seed, args.obstacles)
    _emit(json.dumps(env.to_json(), indent=2), args.out)


def cmd_partition(args):
    art = prepare(_env(args), args.merge_faces)
    p = art.partition
    if args.out:
        p.dump(args.out)
    print(f"vertices {p.n}  free faces {p.d}  halfspaces {sum(len(f) for f in p.faces)}")


def cmd_check_ib(args):
    art = prepare(_env(args), args.merge_faces)
    ok, witness = is_pairwise_ib_representable(art.partition.cdc())
    if ok:
        print("pairwise IB-representable")
        return 0
    print(f"not pairwise IB-representable: minimal infeasible triple {list(witness)}")
    return 1


def cmd_cover(args):
    art = prepare(_env(args), args.merge_faces)
    if art.cover_original is None:
        print("partition is not pairwise IB-representable", file=sys.stderr)
        return 1
    cover = art.cover_original if args.original else art.cover_merged
    check = validate_cover(cover, art.conflict)
    print(f"depth original {art.cover_original.depth}  merged {art.cover_merged.depth}  "
          f"valid {bool(check)}  separators ok {art.separator_log.all_ok}", file=sys.stderr)
    if args.out:
        cover.dump(args.out)
    else:
        print(cover.to_table())
    if args.conflict_out:
        art.conflict.dump(args.conflict_out)
    return 0 if check else 1


def cmd_formulate(args):
    _, _, m = _model(args)
    out = {"assign": m.summary("assign"), "total": m.summary(None),
           "variables": len(m.vars), "rows": len(m.rows)}
    _emit(json.dumps(out, indent=2), args.out)


def cmd_export_lp(args):
    _, _, m = _model(args)
    path = export_lp(m, args.out or f"{m.name}.lp")
    print(path)


def cmd_solve(args):
    if args.lp:
        m = read_lp(args.lp)
    else:
        _, _, m = _model(args)
    try:
        res = solve_milp(m, time_limit=args.time_limit, node_limit=args.node_limit)
    except UnsupportedModel as exc:
        print(f"{exc}; export it with export-lp instead", file=sys.stderr)
        return 2
    out = res.to_json(m if args.values else None)
    if not args.lp and res.x is not None:
        out["trimmed_steps"] = trimmed_steps(m, res.x, args.steps)
    _emit(json.dumps(out, indent=2), args.out)
    return 0 if res.status in ("optimal",) else 2


def cmd_plot(args):
    env = _env(args)
    art = prepare(env, args.merge_faces)
    p = art.partition
    stage = args.stage
    if stage == "triangulation":
        cv = plot_triangulation(env, art.triangulation)
    elif stage == "partition":
        cv = plot_partition(env, p)
    elif stage == "conflict":
        cv = plot_conflict(env, p, art.conflict or conflict_graph(p.cdc()))
    elif stage == "separator":
        g = FiniteElementGraph.from_partition(p)
        cv = plot_separator(env, p, g, separator(g, SeparatorLog()))
    else:
        args.objective = "l1"
        _, _, m = _model(args)
        res = solve_milp(m, time_limit=args.time_limit, node_limit=args.node_limit)
        if res.x is None:
            print(f"no solution ({res.status})", file=sys.stderr)
            return 2
        prm = _params(args)
        steps = step_positions(m, res.x, args.steps)
        heads = [sum(t * round(res.x[m.index(f"h{s}_{q + 1}")]) for q, t in enumerate(prm.headings))
                 for s in range(1, args.steps + 1)]
        cv = plot_solution(env, p, [tuple(q) for q in steps], heads, prm.goal[:2])
    cv.save(args.out or f"{stage}.svg")
    return 0


def _seeds(text: str) -> list:
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out += range(int(a), int(b) + 1)
        else:
            out.append(int(part))
    return out


def cmd_bench(args):
    params = FootstepParams(n_steps=args.steps, objective="l1")

    def progress(recs):
        r = recs[0]
        print(f"obstacles {r.obstacles} seed {r.scenario}: "
              + "  ".join(f"{x.method}={x.status}" for x in recs), file=sys.stderr)

    records = bench(_seeds(args.seeds), args.obstacle_counts, args.methods, params,
                    args.merge_faces, args.time_limit, args.node_limit, args.jobs, progress)
    paths = write_bench(records, args.out or "bench", args.obstacle_counts, args.methods)
    print(Path(paths["tables"]).read_text())
    for k, v in paths.items():
        print(f"{k}: {v}", file=sys.stderr)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdcpath", description=__doc__)
    ap.add_argument("--backend", action="store_true", help="print the active kernel backend and exit")
    sub = ap.add_subparsers(dest="command")

    def scenario(p):
        p.add_argument("--env", help="environment JSON (overrides --seed/--obstacles)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--obstacles", type=int, default=1)
        p.add_argument("--merge-faces", action="store_true", help="greedily merge adjacent free faces")
        p.add_argument("--out")

    def model(p):
        p.add_argument("--method", choices=METHODS, default="ib")
        p.add_argument("--steps", type=int, default=25)
        p.add_argument("--objective", choices=("l1", "quadratic"), default="l1")

    def limits(p):
        p.add_argument("--time-limit", type=float, default=300.0)
        p.add_argument("--node-limit", type=int, default=None)

    p = sub.add_parser("gen-env", help="generate a random scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--obstacles", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_env)

    p = sub.add_parser("partition", help="constrained Delaunay partition of free space")
    scenario(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("check-ib", help="pairwise IB-representability test")
    scenario(p)
    p.set_defaults(func=cmd_check_ib)

    p = sub.add_parser("cover", help="biclique cover of the conflict graph")
    scenario(p)
    p.add_argument("--original", action="store_true", help="emit the cover before merging")
    p.add_argument("--conflict-out", help="write the conflict graph edge list here")
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("formulate", help="model size summary")
    scenario(p)
    model(p)
    p.set_defaults(func=cmd_formulate)

    p = sub.add_parser("export-lp", help="write the footstep model as an LP file")
    scenario(p)
    model(p)
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("solve", help="solve the footstep model (L1 objective) or an LP file")
    scenario(p)
    model(p)
    limits(p)
    p.add_argument("--lp", help="solve this LP file instead of building a model")
    p.add_argument("--values", action="store_true", help="include variable values in the output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("plot", help="SVG of a pipeline stage")
    scenario(p)
    model(p)
    limits(p)
    p.add_argument("--stage", choices=("triangulation", "partition", "conflict", "separator",
                                       "solution"), default="partition")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bench", help="benchmark over seeds, obstacle counts and methods")
    p.add_argument("--seeds", default="0-4", help="e.g. 0-9 or 1,5,7")
    p.add_argument("--obstacle-counts", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--merge-faces", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output directory (default ./bench)")
    limits(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.backend:
        print(_kernels.backend_name())
        return 0
    if not args.command:
        ap.print_help()
        return 1
    rc = args.func(args)
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
