"""Binary-heap Dijkstra over layer graphs, k-best route sets and route segmentation.

Ordering of routes is total: lower cost first (costs within ``TIE_TOL`` are
ties), then fewer hops, then the lexicographically smaller node sequence.
"""

from __future__ import annotations

import functools
import heapq
from dataclasses import dataclass

from .errors import EmptySet, NodeNotFound, NoRoute
from .lsg import Graph, LayerId
from .subsample import Subgraph

TIE_TOL = 1e-9


@dataclass(frozen=True)
class Route:
    nodes: tuple
    total_cost: float
    layer: LayerId
    edges: tuple = ()  # parent-graph edge indices, one per hop

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1


@dataclass(frozen=True)
class GlobalSegment:
    src: int
    dst: int


def compare_routes(a: Route, b: Route) -> int:
    if abs(a.total_cost - b.total_cost) > TIE_TOL:
        return -1 if a.total_cost < b.total_cost else 1
    if a.hops != b.hops:
        return -1 if a.hops < b.hops else 1
    if a.nodes != b.nodes:
        return -1 if a.nodes < b.nodes else 1
    return 0


route_key = functools.cmp_to_key(compare_routes)


def _trace_back(pred, node):
    out = []
    while node is not None:
        out.append(node)
        node = pred[node]
    out.reverse()
    return out


def _dijkstra(adj, blocked, src, dst, excluded=()):
    """Label-setting search; returns (nodes, edge indices, cost) or None.

    Adjacency entries are ``(nbr, weight, edge_index, is_traversability)``;
    non-traversability entries and blocked/excluded edges are skipped inline.
    """
    skip = blocked.union(excluded) if excluded else blocked
    dist = {src: 0.0}
    hops = {src: 0}
    pred = {src: None}
    via = {src: None}
    done = set()
    heap = [(0.0, 0, src)]
    pop, push = heapq.heappop, heapq.heappush
    while heap:
        d, h, u = pop(heap)
        if u in done or d != dist[u] or h != hops[u]:
            continue
        done.add(u)
        if u == dst:
            break
        for v, w, idx, trav in adj[u]:
            if not trav or idx in skip or v in done:
                continue
            nd = d + w
            cur = dist.get(v)
            if cur is not None:
                if nd > cur + TIE_TOL:
                    continue
                if nd >= cur - TIE_TOL:
                    # tie on cost: fewer hops, then lexicographic node sequence
                    if h + 1 > hops[v]:
                        continue
                    if h + 1 == hops[v] and not _trace_back(pred, u) < _trace_back(pred, pred[v]):
                        continue
            dist[v] = nd
            hops[v] = h + 1
            pred[v] = u
            via[v] = idx
            push(heap, (nd, h + 1, v))
    if dst not in done:
        return None
    nodes = _trace_back(pred, dst)
    return tuple(nodes), tuple(via[n] for n in nodes[1:]), dist[dst]


def shortest_path(sg: Subgraph, src: int, dst: int, excluded=()) -> Route:
    """Minimum-cost loopless route over Traversable edges of a path-finding subgraph."""
    for n in (src, dst):
        if n not in sg.nodes:
            raise NodeNotFound(f"node {n} not in {sg!r}")
    found = _dijkstra(sg.adjacency(), sg.blocked, src, dst, excluded)
    if found is None:
        raise NoRoute(f"no traversable route {src} -> {dst} in {sg.layer.name} graph")
    nodes, edges, cost = found
    return Route(nodes, cost, sg.layer, edges)


def shortest_path_inline(g: Graph, src: int, dst: int, excluded=()) -> Route:
    """Same search over the unfiltered multi-domain graph, filtering tags during relaxation."""
    for n in (src, dst):
        if n not in g.nodes:
            raise NodeNotFound(f"node {n} not in {g!r}")
    found = _dijkstra(g.adjacency(), g.blocked, src, dst, excluded)
    if found is None:
        raise NoRoute(f"no traversable route {src} -> {dst} in {g.layer.name} graph")
    nodes, edges, cost = found
    return Route(nodes, cost, g.layer, edges)


def eval_global_layer_path(sg: Subgraph, src: int, dst: int, k: int = 1) -> list[Route]:
    """Up to ``k`` distinct loopless routes in route order.

    Alternates come from re-running the search with one edge of an accepted
    route excluded at a time; a route found that way keeps its exclusions
    when its own edges are excluded in turn.
    """
    if k < 1:
        raise ValueError("k must be positive")
    best = shortest_path(sg, src, dst)
    routes = [best]
    seen = {best.nodes}
    candidates: list = []  # (route, exclusion set)

    def spawn(route, excluded):
        for idx in route.edges:
            ex = excluded | {idx}
            try:
                alt = shortest_path(sg, src, dst, excluded=ex)
            except NoRoute:
                continue
            if alt.nodes not in seen:
                seen.add(alt.nodes)
                candidates.append((alt, ex))

    if k > 1:
        spawn(best, frozenset())
    while len(routes) < k and candidates:
        candidates.sort(key=lambda c: route_key(c[0]))
        nxt, ex = candidates.pop(0)
        routes.append(nxt)
        spawn(nxt, ex)
    return routes


def get_best_path(routes) -> Route:
    routes = list(routes)
    if not routes:
        raise EmptySet("no routes to choose from")
    return min(routes, key=route_key)


def segment_path(route: Route) -> list[GlobalSegment]:
    return [GlobalSegment(a, b) for a, b in zip(route.nodes, route.nodes[1:])]
