import pytest
from hypothesis import given, settings, strategies as st

from oracles import best_path
from spade.generate import GeneratorParams, generate_synthetic_lsg
from spade.lsg import Edge, Graph, LayerId, NodeAttributes, Observational, Status, Symbolic, Traversability
from spade.search import shortest_path
from spade.subsample import MODE_FILTER, TaskMode, extract_domain_subgraph
from spade.errors import NoRoute


def mixed_graph(n, triples, layer=LayerId.POSE):
    g = Graph(layer)
    for i in range(n):
        g.add_node(i, NodeAttributes((float(i), 0.0, 0.0), layer))
    for u, v, kind, w, blocked in triples:
        if kind == 0:
            attr = Traversability(w, Status.BLOCKED if blocked else Status.TRAVERSABLE)
        elif kind == 1:
            attr = Observational(0.5, w)
        else:
            attr = Symbolic()
        g.add_edge(Edge(u, v, attr))
    return g


@st.composite
def multi_domain_graphs(draw, max_nodes=10):
    n = draw(st.integers(2, max_nodes))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    triples = []
    for u, v in pairs:
        for kind in range(3):
            if draw(st.booleans()):
                w = draw(st.floats(0.1, 10.0))
                triples.append((u, v, kind, w, kind == 0 and draw(st.integers(0, 4)) == 0))
    return n, triples


def test_path_finding_keeps_only_traversability():
    g = mixed_graph(
        4,
        [
            (0, 1, 2, 0, False),
            (1, 2, 2, 0, False),
            (2, 3, 2, 0, False),
            (0, 1, 0, 1.0, False),
            (1, 3, 0, 2.0, True),
            (0, 3, 1, 1.0, False),
        ],
    )
    sg = extract_domain_subgraph(g, TaskMode.PATH_FINDING)
    assert [g.edges.index(e) for e in sg.edges] == [3, 4]
    assert set(sg.nodes) == set(g.nodes)
    # blocked edge retained in the view
    assert sg.edges[1].attr.status is Status.BLOCKED


def test_empty_graph():
    for mode in TaskMode:
        sg = extract_domain_subgraph(Graph(LayerId.TARGET), mode)
        assert len(sg) == 0 and not sg.nodes


def test_generator_count_oracle_seed11():
    lsg, _ = generate_synthetic_lsg(
        GeneratorParams(targets=16, seed=11, traversable_frac=0.6, observational_frac=0.7)
    )
    g = lsg.target_graph
    count = 0
    for e in g.edges:
        if e.attr.kind == "traversability":
            count += 1
    assert len(extract_domain_subgraph(g)) == count
    assert 0 < count < len(g.edges)


@settings(max_examples=60, deadline=None)
@given(multi_domain_graphs())
def test_idempotence_and_partition(data):
    n, triples = data
    g = mixed_graph(n, triples)
    seen = []
    for mode in TaskMode:
        sg = extract_domain_subgraph(g, mode)
        again = extract_domain_subgraph(sg.as_graph(), mode)
        assert again.edges == sg.edges
        assert all(type(e.attr) is MODE_FILTER[mode] for e in sg.edges)
        seen.extend(sg.edge_indices)
    assert sorted(seen) == list(range(len(g.edges)))


@settings(max_examples=150, deadline=None)
@given(multi_domain_graphs(), st.data())
def test_path_preservation_against_enumeration(data, draw):
    n, triples = data
    g = mixed_graph(n, triples)
    src = draw.draw(st.integers(0, n - 1))
    dst = draw.draw(st.integers(0, n - 1))
    usable = [(u, v, w) for u, v, kind, w, blocked in triples if kind == 0 and not blocked]
    expect = best_path(usable, src, dst)
    sg = extract_domain_subgraph(g)
    if expect is None:
        with pytest.raises(NoRoute):
            shortest_path(sg, src, dst)
    else:
        route = shortest_path(sg, src, dst)
        assert route.nodes == expect[1]
        assert abs(route.total_cost - expect[0]) <= 1e-9


def test_status_flip_seen_without_resubsampling():
    g = mixed_graph(3, [(0, 1, 0, 1.0, False), (1, 2, 0, 1.0, False), (0, 2, 0, 5.0, False)])
    sg = extract_domain_subgraph(g)
    assert shortest_path(sg, 0, 2).nodes == (0, 1, 2)
    g.set_status(0, Status.BLOCKED)
    assert shortest_path(sg, 0, 2).nodes == (0, 2)
