"""Command-line entry point: generate, validate, subsample, plan, simulate, bench."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .bench import bench_sweep, records_to_csv
from .errors import (
    InvariantViolation,
    NoLocalRoute,
    NoRoute,
    ParamError,
    QueryNodeNotFound,
    ScenarioError,
    SchemaError,
    SpadeError,
)
from .generate import GeneratorParams, generate_synthetic_lsg
from .lsg import InvariantError, LayerId, load_lsg, localize_robot_in_graph, save_lsg
from .planner import PlannerConfig, Query, plan_static
from .sim import load_scenario, run_scenario
from .subsample import TaskMode, extract_domain_subgraph

EXIT_OK = 0
EXIT_NO_ROUTE = 2
EXIT_INPUT = 3
EXIT_INVARIANT = 4

log = logging.getLogger("spade")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(kind=float):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return v

    return conv


def _non_negative(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _fraction(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text}")
    return v


def _sizes(text):
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if not sizes or any(n < 2 for n in sizes):
        raise argparse.ArgumentTypeError("sizes must be integers >= 2")
    return sizes


def _path(text):
    try:
        parts = tuple(int(p) for p in text.replace(",", "/").split("/") if p != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad node path {text!r}") from None
    if len(parts) > 3:
        raise argparse.ArgumentTypeError("node path has at most 3 parts (target/level/pose)")
    return parts


def _vec3(text):
    try:
        v = tuple(float(c) for c in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad vector {text!r}") from None
    if len(v) != 3:
        raise argparse.ArgumentTypeError("expected x,y,z")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spade", description="Hierarchical path planning over layered scene graphs.")
    p.add_argument("--version", action="version", version=f"spade {__version__}")
    verb = p.add_mutually_exclusive_group()
    verb.add_argument("-q", "--quiet", action="store_true", help="errors only on stderr")
    verb.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="synthetic layered graph and voxel world")
    g.add_argument("--targets", type=_positive(int), default=4)
    g.add_argument("--spacing", type=_positive(), default=20.0)
    g.add_argument("--levels", type=_positive(int), default=1)
    g.add_argument("--poses", type=_positive(int), default=8)
    g.add_argument("--traversable-frac", type=_fraction, default=1.0)
    g.add_argument("--observational-frac", type=_fraction, default=0.0)
    g.add_argument("--jitter", type=_non_negative, default=1.0)
    g.add_argument("--resolution", type=_positive(), default=0.2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="graph document path (default stdout)")
    g.add_argument("--grid-out", help="also write the voxel world here")

    v = sub.add_parser("validate", help="load a graph document and check invariants (exit 0/1)")
    v.add_argument("lsg")

    s = sub.add_parser("subsample", help="task-mode edge subsampling of one graph")
    s.add_argument("lsg")
    s.add_argument("--scope", type=_path, default=(), help="graph scope, e.g. '' (targets) or 0 or 0/1")
    s.add_argument("--mode", choices=[m.value for m in TaskMode], default=TaskMode.PATH_FINDING.value)
    s.add_argument("--out")

    pl = sub.add_parser("plan", help="global route and per-segment local plans (static world)")
    pl.add_argument("lsg", nargs="?")
    pl.add_argument("--graph", help="graph document (alternative to the positional argument)")
    pl.add_argument("--k", type=_positive(int), default=1, help="number of global route alternatives")
    start = pl.add_mutually_exclusive_group(required=True)
    start.add_argument("--from", dest="from_node", type=_path, help="start Pose node target/level/pose")
    start.add_argument("--start", type=_vec3, help="start position x,y,z")
    pl.add_argument("--to", type=_path, required=True, help="terminal target[/level[/pose]]")
    pl.add_argument("--out")

    sm = sub.add_parser("simulate", help="run a scenario and emit its trace as JSON lines")
    sm.add_argument("scenario")
    sm.add_argument("--out")
    sm.add_argument("--speed", type=_positive())
    sm.add_argument("--sensing", type=_positive())
    sm.add_argument("--radius", type=_non_negative, help="robot radius")
    sm.add_argument("--bound", type=_positive(), help="detour search box size")
    sm.add_argument("--dt", type=_positive())
    sm.add_argument("--dump-map", help="write the final voxel map here")

    b = sub.add_parser("bench", help="subsampled vs. original search timing sweep (CSV)")
    b.add_argument("--sizes", type=_sizes, default=[250, 500, 1000, 2000])
    b.add_argument("--traversable-frac", type=_fraction, default=0.33)
    b.add_argument("--reps", type=_positive(int), default=100)
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--out")
    return p


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def cmd_generate(a) -> int:
    params = GeneratorParams(
        targets=a.targets,
        spacing=a.spacing,
        levels=a.levels,
        poses=a.poses,
        traversable_frac=a.traversable_frac,
        observational_frac=a.observational_frac,
        seed=a.seed,
        jitter=a.jitter,
        resolution=a.resolution,
    )
    lsg, grid = generate_synthetic_lsg(params)
    _write(json.dumps(save_lsg(lsg), indent=1) + "\n", a.out)
    if a.grid_out:
        Path(a.grid_out).write_text(json.dumps(grid.to_dict()) + "\n", encoding="utf-8")
    log.info("generated %d targets, %d occupied voxels", a.targets, grid.occupied_count)
    return EXIT_OK


def cmd_validate(a) -> int:
    try:
        lsg = load_lsg(a.lsg)
    except (SpadeError, OSError) as exc:
        sys.stdout.write(_json({"valid": False, "error": type(exc).__name__, "message": str(exc)}))
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    counts = {layer.name.lower(): sum(1 for _ in lsg.iter_nodes(layer)) for layer in LayerId}
    sys.stdout.write(_json({"valid": True, "nodes": counts}))
    return EXIT_OK


def cmd_subsample(a) -> int:
    lsg = load_lsg(a.lsg)
    g = lsg.graph_at(a.scope)
    t0 = time.perf_counter_ns()
    sg = extract_domain_subgraph(g, TaskMode(a.mode))
    elapsed = (time.perf_counter_ns() - t0) / 1000.0
    out = {
        "scope": list(a.scope),
        "layer": g.layer.name,
        "mode": a.mode,
        "nodes": len(g.nodes),
        "edges_total": len(g.edges),
        "edges_sub": len(sg),
        "edges": [{"u": e.u, "v": e.v, "type": e.attr.kind} for e in sg.edges],
        "subsample_us": round(elapsed, 3),
    }
    _write(_json(out), a.out)
    return EXIT_OK


def cmd_plan(a) -> int:
    if (a.lsg is None) == (a.graph is None):
        raise ValueError("give the graph document either positionally or with --graph")
    lsg = load_lsg(a.lsg or a.graph)
    if a.from_node is not None:
        if len(a.from_node) != 3:
            raise QueryNodeNotFound("--from needs a full target/level/pose path")
        position = lsg.node(a.from_node).pose
    else:
        position = a.start
    if not a.to:
        raise QueryNodeNotFound("--to needs at least a target")
    query = Query(*a.to)
    route, plans, events = plan_static(lsg, query, position, PlannerConfig(k_routes=a.k))
    tg = lsg.target_graph
    out = {
        "start": list(localize_robot_in_graph(lsg, position).pose_path),
        "route": list(route.nodes),
        "cost": round(route.total_cost, 6),
        "edges": [
            {"u": tg.edges[i].u, "v": tg.edges[i].v, "w_t": round(tg.edge_weight(i), 6)} for i in route.edges
        ],
        "alternatives": events[0]["detail"]["alternatives"],
        "segments": [
            {
                "segment": None if p.segment is None else [p.segment.src, p.segment.dst],
                "hops": [list(h.node) for h in p.hops],
                "length": round(p.length, 6),
            }
            for p in plans
        ],
    }
    _write(_json(out), a.out)
    return EXIT_OK


def cmd_simulate(a) -> int:
    s = load_scenario(a.scenario)
    for attr, name in (("speed", "speed"), ("sensing", "sensing_radius"), ("radius", "robot_radius"),
                       ("bound", "detour_bound"), ("dt", "dt")):
        val = getattr(a, attr)
        if val is not None:
            setattr(s, name, val)
    trace = run_scenario(s, record_positions=False)
    _write(trace.to_jsonl(), a.out)
    if a.dump_map:
        Path(a.dump_map).write_text(json.dumps(trace.grid.to_dict()) + "\n", encoding="utf-8")
    log.info("statuses: %s", trace.statuses)
    return EXIT_OK if trace.statuses and all(st == "Arrived" for st in trace.statuses) else EXIT_NO_ROUTE


def cmd_bench(a) -> int:
    records = bench_sweep(a.sizes, a.traversable_frac, a.reps, a.seed)
    for r in records:
        log.info("%s: speedup %.3f (subsample %.1f us, excluded)", r.label, r.speedup, r.subsample_us)
    _write(records_to_csv(records), a.out)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "validate": cmd_validate,
    "subsample": cmd_subsample,
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.ERROR if a.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(a.verbose, 2)]
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except (NoRoute, NoLocalRoute) as exc:
        sys.stdout.write(_json({"error": "NoRoute", "message": str(exc)}))
        log.error("no route: %s", exc)
        return EXIT_NO_ROUTE
    except InvariantViolation as exc:
        sys.stdout.write(_json({"error": "InvariantViolation", "message": str(exc)}))
        log.error("invariant violation: %s", exc)
        return EXIT_INVARIANT
    except (SpadeError, InvariantError, SchemaError, ScenarioError, ParamError, OSError, ValueError) as exc:
        sys.stdout.write(_json({"error": type(exc).__name__, "message": str(exc)}))
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
