import csv
import io
import itertools

import pytest

from spade.bench import CSV_COLUMNS, BenchRecord, bench_pair, bench_sweep, complexity_model, records_to_csv
from spade.errors import DomainError, InvariantViolation, NoRoute
from spade.generate import multidomain_graph
from spade.lsg import Status
from spade.search import shortest_path, shortest_path_inline
from spade.subsample import extract_domain_subgraph


def test_model_examples():
    assert complexity_model(2, 0) == 2.0
    assert complexity_model(4, 4) == 16.0
    assert complexity_model(1024, 4096) == 51200.0


def test_model_domain():
    with pytest.raises(DomainError):
        complexity_model(1, 10)


def test_model_monotone():
    vs, es = [2, 3, 10, 100, 1000], [0, 1, 5, 100, 10_000]
    for v, e in itertools.product(vs, es):
        assert complexity_model(v + 1, e) > complexity_model(v, e)
        assert complexity_model(v, e + 1) > complexity_model(v, e)


def test_traversable_only_graph():
    g = multidomain_graph(100, 1.0, seed=3)
    rec = bench_pair(g, 0, 99, reps=5, warmup=1)
    assert rec.edges_sub == rec.edges_total
    assert rec.t_sub_us > 0 and rec.t_orig_us > 0


@pytest.mark.parametrize("seed", range(10))
def test_arms_agree(seed):
    g = multidomain_graph(80, 1 / 3, seed=seed)
    # block a few traversable edges so the status filter matters too
    trav = [i for i, e in enumerate(g.edges) if e.attr.kind == "traversability"]
    for i in trav[seed::7]:
        g.set_status(i, Status.BLOCKED)
    sg = extract_domain_subgraph(g)
    for src, dst in [(0, 79), (seed, 79 - seed), (40, 3)]:
        try:
            a = shortest_path(sg, src, dst)
        except NoRoute:
            with pytest.raises(NoRoute):
                shortest_path_inline(g, src, dst)
            continue
        assert shortest_path_inline(g, src, dst) == a


def test_record_invariants():
    with pytest.raises(InvariantViolation):
        BenchRecord("x", 10, 5, 6, 1.0, 1.0, (0, 1), 1)
    with pytest.raises(ValueError):
        BenchRecord("x", 10, 5, 5, 1.0, 1.0, (0, 1), 0)


def parse(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_single_point_sweep():
    text = records_to_csv(bench_sweep([50], reps=3, warmup=1))
    lines = text.strip().splitlines()
    assert lines[0].split(",") == CSV_COLUMNS
    assert len(lines) == 2


def test_four_point_sweep():
    rows = parse(records_to_csv(bench_sweep([250, 500, 1000, 2000], reps=3, warmup=1)))
    assert len(rows) == 4
    nodes = [int(r["nodes"]) for r in rows]
    assert nodes == sorted(nodes) and len(set(nodes)) == 4
    for r in rows:
        assert int(r["edges_sub"]) < int(r["edges_total"])
        assert float(r["speedup"]) == pytest.approx(float(r["t_orig_us"]) / float(r["t_sub_us"]), rel=1e-3)
        assert float(r["model_sub"]) == pytest.approx(complexity_model(int(r["nodes"]), int(r["edges_sub"])), rel=1e-6)
