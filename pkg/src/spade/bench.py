"""Timing of route search over subsampled vs. unfiltered multi-domain graphs."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass

from .errors import DomainError, InvariantViolation
from .generate import multidomain_graph
from .lsg import Graph
from .search import shortest_path, shortest_path_inline
from .subsample import TaskMode, extract_domain_subgraph

CSV_COLUMNS = [
    "label",
    "nodes",
    "edges_total",
    "edges_sub",
    "t_sub_us",
    "t_orig_us",
    "speedup",
    "model_sub",
    "model_orig",
    "reps",
    "seed",
]
WARMUP = 10


def complexity_model(v: int, e: int) -> float:
    """(e + v) * log2(v), the binary-heap Dijkstra cost model."""
    if v < 2:
        raise DomainError(f"complexity model needs v >= 2, got {v}")
    return (e + v) * math.log2(v)


@dataclass
class BenchRecord:
    label: str
    nodes: int
    edges_total: int
    edges_sub: int
    t_sub_us: float
    t_orig_us: float
    query: tuple
    reps: int
    seed: int = 0
    subsample_us: float = 0.0  # one-off extraction cost, reported but not in t_sub_us

    def __post_init__(self):
        if self.edges_sub > self.edges_total:
            raise InvariantViolation("subsampled edge count exceeds the total")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")

    @property
    def speedup(self) -> float:
        return self.t_orig_us / self.t_sub_us

    @property
    def model_sub(self) -> float:
        return complexity_model(self.nodes, self.edges_sub)

    @property
    def model_orig(self) -> float:
        return complexity_model(self.nodes, self.edges_total)

    def row(self) -> dict:
        return {
            "label": self.label,
            "nodes": self.nodes,
            "edges_total": self.edges_total,
            "edges_sub": self.edges_sub,
            "t_sub_us": f"{self.t_sub_us:.3f}",
            "t_orig_us": f"{self.t_orig_us:.3f}",
            "speedup": f"{self.speedup:.4f}",
            "model_sub": f"{self.model_sub:.3f}",
            "model_orig": f"{self.model_orig:.3f}",
            "reps": self.reps,
            "seed": self.seed,
        }


def bench_pair(g: Graph, src, dst, reps: int = 100, label: str = "", seed: int = 0, warmup: int = WARMUP) -> BenchRecord:
    """Median search time of both arms over ``reps`` interleaved repetitions.

    The subsampled view (and both adjacency structures) are built before any
    timing starts.  Arm order alternates each repetition.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    clock = time.perf_counter_ns
    t0 = clock()
    sg = extract_domain_subgraph(g, TaskMode.PATH_FINDING)
    sg.adjacency()
    sub_cost = (clock() - t0) / 1000.0
    g.adjacency()

    ref_sub = shortest_path(sg, src, dst)
    ref_orig = shortest_path_inline(g, src, dst)
    if ref_sub.nodes != ref_orig.nodes:
        raise InvariantViolation(f"arms disagree: {ref_sub.nodes} vs {ref_orig.nodes}")
    for _ in range(warmup):
        shortest_path(sg, src, dst)
        shortest_path_inline(g, src, dst)

    t_sub, t_orig = [], []
    for i in range(reps):
        arms = ((shortest_path, sg, t_sub), (shortest_path_inline, g, t_orig))
        for fn, graph, acc in arms if i % 2 == 0 else arms[::-1]:
            start = clock()
            route = fn(graph, src, dst)
            acc.append(clock() - start)
            if route.nodes != ref_sub.nodes:
                raise InvariantViolation("arms disagree during timing")
    return BenchRecord(
        label=label or f"n{len(g.nodes)}",
        nodes=len(g.nodes),
        edges_total=len(g.edges),
        edges_sub=len(sg),
        t_sub_us=statistics.median(t_sub) / 1000.0,
        t_orig_us=statistics.median(t_orig) / 1000.0,
        query=(src, dst),
        reps=reps,
        seed=seed,
        subsample_us=sub_cost,
    )


def bench_sweep(sizes, traversable_frac: float = 1 / 3, reps: int = 100, seed: int = 42, warmup: int = WARMUP) -> list:
    """One record per size; the query spans opposite corners of the generated grid."""
    out = []
    for n in sizes:
        g = multidomain_graph(int(n), traversable_frac, seed)
        out.append(bench_pair(g, 0, int(n) - 1, reps, label=f"n{n}", seed=seed, warmup=warmup))
    return out


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()
