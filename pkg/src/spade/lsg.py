"""Nested layered semantic graph (Target > Level > Pose > Feature).

Nodes are addressed globally by a *node path*: a tuple of per-graph indices,
one per nesting step.  ``(t,)`` is a Target node, ``(t, l)`` a Level node of
target ``t``, ``(t, l, p)`` a Pose node and ``(t, l, p, f)`` a Feature node.
A *scope* addresses a graph the same way: ``()`` is the Target graph and
``(t, l)`` is the Pose graph nested in Level ``l`` of Target ``t``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import ClassVar, Iterator, Union

import jsonschema
import numpy as np

from .errors import (
    EmptyGraph,
    InvariantError,
    NodeNotFound,
    NoNestedGraph,
    NoSuchEdge,
    NotTraversabilityEdge,
    SchemaError,
)

NodePath = tuple  # tuple[int, ...]; length encodes the layer


class LayerId(enum.IntEnum):
    FEATURE = 0
    POSE = 1
    LEVEL = 2
    TARGET = 3

    def below(self) -> "LayerId":
        if self is LayerId.FEATURE:
            raise ValueError("Feature layer has no layer below it")
        return LayerId(self - 1)


def layer_of(path: NodePath) -> LayerId:
    if not 1 <= len(path) <= 4:
        raise ValueError(f"invalid node path {path!r}")
    return LayerId(4 - len(path))


class Status(str, enum.Enum):
    TRAVERSABLE = "traversable"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class Symbolic:
    kind: ClassVar[str] = "symbolic"


@dataclass(frozen=True)
class Traversability:
    w_t: float | None = None
    status: Status = Status.TRAVERSABLE
    kind: ClassVar[str] = "traversability"

    def __post_init__(self):
        if self.w_t is not None and not self.w_t >= 0:
            raise InvariantError(f"w_t must be non-negative, got {self.w_t}")


@dataclass(frozen=True)
class Observational:
    gamma: float
    w_o: float
    kind: ClassVar[str] = "observational"

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvariantError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.w_o >= 0:
            raise InvariantError(f"w_o must be non-negative, got {self.w_o}")


EdgeAttribute = Union[Symbolic, Traversability, Observational]


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    attr: EdgeAttribute

    def joins(self, a: int, b: int) -> bool:
        return (self.u == a and self.v == b) or (self.u == b and self.v == a)


@dataclass
class NodeAttributes:
    pose: tuple
    layer: LayerId
    nested: "Graph | None" = None
    inspection_status: float | None = None
    transition_level: int | None = None

    @property
    def position(self) -> np.ndarray:
        return np.asarray(self.pose, dtype=float)


class Graph:
    """One layer graph: nodes keyed by local index plus an undirected edge list.

    Traversability status changes go through :meth:`set_status` so that the
    cached adjacency and blocked-edge set stay consistent.
    """

    def __init__(self, layer: LayerId, nodes=None, edges=None):
        self.layer = LayerId(layer)
        self.nodes: dict[int, NodeAttributes] = dict(nodes or {})
        self.edges: list[Edge] = list(edges or [])
        self._blocked = {
            i
            for i, e in enumerate(self.edges)
            if isinstance(e.attr, Traversability) and e.attr.status is Status.BLOCKED
        }
        self._adjacency = None

    def __repr__(self):
        return f"Graph({self.layer.name}, nodes={len(self.nodes)}, edges={len(self.edges)})"

    def add_node(self, index: int, attrs: NodeAttributes) -> None:
        self.nodes[index] = attrs
        self._adjacency = None

    def add_edge(self, edge: Edge) -> int:
        self.edges.append(edge)
        if isinstance(edge.attr, Traversability) and edge.attr.status is Status.BLOCKED:
            self._blocked.add(len(self.edges) - 1)
        self._adjacency = None
        return len(self.edges) - 1

    @property
    def blocked(self) -> set:
        """Indices of traversability edges currently marked Blocked (live set)."""
        return self._blocked

    def edges_between(self, a: int, b: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.joins(a, b)]

    def traversability_edge(self, a: int, b: int) -> int | None:
        for i in self.edges_between(a, b):
            if isinstance(self.edges[i].attr, Traversability):
                return i
        return None

    def set_status(self, index: int, status: Status) -> None:
        edge = self.edges[index]
        if not isinstance(edge.attr, Traversability):
            raise NotTraversabilityEdge(f"edge {index} is {edge.attr.kind}")
        self.edges[index] = replace(edge, attr=replace(edge.attr, status=Status(status)))
        if status is Status.BLOCKED:
            self._blocked.add(index)
        else:
            self._blocked.discard(index)

    def edge_weight(self, index: int) -> float:
        """Traversal cost of a traversability edge, Euclidean when w_t is absent."""
        edge = self.edges[index]
        if edge.attr.w_t is not None:
            return float(edge.attr.w_t)
        a = self.nodes[edge.u].pose
        b = self.nodes[edge.v].pose
        return math.dist(a, b)

    def adjacency(self) -> dict:
        """Full multi-domain adjacency: node -> [(nbr, weight, edge index, is_traversability)].

        Cached; only node/edge insertion invalidates it (status flips are read
        live from :attr:`blocked`).
        """
        if self._adjacency is None:
            adj = {n: [] for n in self.nodes}
            for i, e in enumerate(self.edges):
                trav = isinstance(e.attr, Traversability)
                w = self.edge_weight(i) if trav else 0.0
                adj[e.u].append((e.v, w, i, trav))
                adj[e.v].append((e.u, w, i, trav))
            self._adjacency = adj
        return self._adjacency

    def validate(self, where: str = "") -> None:
        seen = set()
        for i, e in enumerate(self.edges):
            for end in (e.u, e.v):
                if end not in self.nodes:
                    raise InvariantError(
                        f"{where or 'graph'}: edge {i} ({e.u}-{e.v}, {e.attr.kind}) "
                        f"references missing node {end}"
                    )
            key = (min(e.u, e.v), max(e.u, e.v), e.attr.kind)
            if key in seen:
                raise InvariantError(
                    f"{where or 'graph'}: duplicate {e.attr.kind} edge between {e.u} and {e.v}"
                )
            seen.add(key)
        for idx, node in self.nodes.items():
            if node.layer is not self.layer:
                raise InvariantError(
                    f"{where or 'graph'}: node {idx} has layer {node.layer.name}, "
                    f"graph layer is {self.layer.name}"
                )
            if node.nested is not None and node.nested.layer is not self.layer.below():
                raise InvariantError(
                    f"{where}/{idx}: nested graph layer {node.nested.layer.name} is not "
                    f"one below {self.layer.name}"
                )


@dataclass(frozen=True)
class Mutation:
    seq: int
    scope: tuple
    u: int
    v: int
    status: Status


@dataclass(frozen=True)
class RobotState:
    """Odometry ``[x, y, z, psi]``; psi is normalized to (-pi, pi]."""

    x: float
    y: float
    z: float
    psi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "psi", normalize_angle(self.psi))

    @classmethod
    def from_odom(cls, odom) -> "RobotState":
        vals = list(odom)
        if len(vals) == 3:
            vals.append(0.0)
        return cls(*map(float, vals))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def odom(self) -> tuple:
        return (self.x, self.y, self.z, self.psi)


def normalize_angle(a: float) -> float:
    a = math.fmod(a, 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    elif a > math.pi:
        a -= 2 * math.pi
    return a


@dataclass(frozen=True)
class LocalizedState:
    target: int
    level: int
    pose: int

    @property
    def target_path(self) -> NodePath:
        return (self.target,)

    @property
    def level_path(self) -> NodePath:
        return (self.target, self.level)

    @property
    def pose_path(self) -> NodePath:
        return (self.target, self.level, self.pose)


class LayeredSceneGraph:
    def __init__(self, target_graph: Graph):
        if target_graph.layer is not LayerId.TARGET:
            raise InvariantError("top-level graph must be a Target graph")
        self.target_graph = target_graph
        self.mutations: list[Mutation] = []
        self._pose_index = None

    @property
    def version(self) -> int:
        return len(self.mutations)

    def graph_at(self, scope=()) -> Graph:
        g = self.target_graph
        for depth, idx in enumerate(scope):
            node = g.nodes.get(idx)
            if node is None:
                raise NodeNotFound(f"no node {idx} at depth {depth} of scope {tuple(scope)}")
            if node.nested is None:
                raise NoNestedGraph(f"node {tuple(scope[: depth + 1])} has no nested graph")
            g = node.nested
        return g

    def node(self, path: NodePath) -> NodeAttributes:
        path = tuple(path)
        if not path:
            raise NodeNotFound("empty node path")
        g = self.graph_at(path[:-1])
        try:
            return g.nodes[path[-1]]
        except KeyError:
            raise NodeNotFound(f"no node {path}") from None

    def has_node(self, path: NodePath) -> bool:
        try:
            self.node(path)
        except (NodeNotFound, NoNestedGraph):
            return False
        return True

    def iter_nodes(self, layer: LayerId | None = None) -> Iterator[tuple]:
        """Yield ``(path, attrs)`` depth-first in lexicographic path order."""

        def walk(g, prefix):
            for idx in sorted(g.nodes):
                node = g.nodes[idx]
                path = prefix + (idx,)
                if layer is None or node.layer is layer:
                    yield path, node
                if node.nested is not None and (layer is None or node.layer > layer):
                    yield from walk(node.nested, path)

        yield from walk(self.target_graph, ())

    def iter_graphs(self) -> Iterator[tuple]:
        """Yield ``(scope, graph)`` for every graph in the hierarchy."""

        def walk(g, scope):
            yield scope, g
            for idx in sorted(g.nodes):
                if g.nodes[idx].nested is not None:
                    yield from walk(g.nodes[idx].nested, scope + (idx,))

        yield from walk(self.target_graph, ())

    def pose_index(self):
        """All Pose node paths (lexicographic) and their positions as an (n, 3) array."""
        if self._pose_index is None:
            paths, pts = [], []
            for path, node in self.iter_nodes(LayerId.POSE):
                paths.append(path)
                pts.append(node.pose)
            self._pose_index = (paths, np.asarray(pts, dtype=float).reshape(-1, 3))
        return self._pose_index

    def validate(self) -> None:
        for scope, g in self.iter_graphs():
            g.validate(where="/".join(map(str, scope)) or "targets")
        trav_targets = set()
        for e in self.target_graph.edges:
            if isinstance(e.attr, Traversability):
                trav_targets.update((e.u, e.v))
        for t, node in self.target_graph.nodes.items():
            if node.nested is None:
                raise InvariantError(f"target {t} has no Level graph")
            for l, lnode in node.nested.nodes.items():
                if lnode.nested is None:
                    raise InvariantError(f"level {(t, l)} has no Pose graph")
            if node.inspection_status is not None and not node.inspection_status >= 0:
                raise InvariantError(f"target {t}: inspection_status must be >= 0")
            if node.transition_level is not None and node.transition_level not in node.nested.nodes:
                raise InvariantError(
                    f"target {t}: transition_level {node.transition_level} is not in its Level graph"
                )
            if t in trav_targets and node.transition_level is None:
                raise InvariantError(
                    f"target {t} has traversability edges but no designated transition level"
                )


# --------------------------------------------------------------------------
# JSON documents

_POSE3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_EDGE = {
    "type": "object",
    "required": ["u", "v", "type"],
    "properties": {
        "u": {"type": "integer", "minimum": 0},
        "v": {"type": "integer", "minimum": 0},
        "type": {"enum": ["symbolic", "traversability", "observational"]},
        "w_t": {"type": "number", "minimum": 0},
        "status": {"enum": ["traversable", "blocked"]},
        "gamma": {"type": "number", "minimum": 0, "maximum": 1},
        "w_o": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
    "allOf": [
        {
            "if": {"properties": {"type": {"const": "traversability"}}},
            "then": {"required": ["status"], "not": {"anyOf": [{"required": ["gamma"]}, {"required": ["w_o"]}]}},
        },
        {
            "if": {"properties": {"type": {"const": "observational"}}},
            "then": {"required": ["gamma", "w_o"], "not": {"anyOf": [{"required": ["w_t"]}, {"required": ["status"]}]}},
        },
        {
            "if": {"properties": {"type": {"const": "symbolic"}}},
            "then": {"propertyNames": {"enum": ["u", "v", "type"]}},
        },
    ],
}
_EDGES = {"type": "array", "items": {"$ref": "#/$defs/edge"}}
LSG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["targets"],
    "properties": {
        "targets": {"type": "array", "items": {"$ref": "#/$defs/target"}},
        "target_edges": _EDGES,
    },
    "additionalProperties": False,
    "$defs": {
        "edge": _EDGE,
        "feature": {
            "type": "object",
            "required": ["id", "pose"],
            "properties": {"id": {"type": "integer", "minimum": 0}, "pose": _POSE3},
            "additionalProperties": False,
        },
        "pose": {
            "type": "object",
            "required": ["id", "pose"],
            "properties": {
                "id": {"type": "integer", "minimum": 0},
                "pose": _POSE3,
                "features": {"type": "array", "items": {"$ref": "#/$defs/feature"}},
                "edges": _EDGES,
            },
            "additionalProperties": False,
        },
        "level": {
            "type": "object",
            "required": ["id", "pose", "poses"],
            "properties": {
                "id": {"type": "integer", "minimum": 0},
                "pose": _POSE3,
                "poses": {"type": "array", "items": {"$ref": "#/$defs/pose"}},
                "edges": _EDGES,
            },
            "additionalProperties": False,
        },
        "target": {
            "type": "object",
            "required": ["id", "pose", "levels"],
            "properties": {
                "id": {"type": "integer", "minimum": 0},
                "pose": _POSE3,
                "inspection_status": {"type": "number", "minimum": 0},
                "transition_level": {"type": "integer", "minimum": 0},
                "levels": {"type": "array", "items": {"$ref": "#/$defs/level"}},
                "edges": _EDGES,
            },
            "additionalProperties": False,
        },
    },
}
_VALIDATOR = jsonschema.Draft202012Validator(LSG_SCHEMA)


def _edge_from_doc(d: dict) -> Edge:
    kind = d["type"]
    if kind == "symbolic":
        attr = Symbolic()
    elif kind == "traversability":
        attr = Traversability(w_t=d.get("w_t"), status=Status(d["status"]))
    else:
        attr = Observational(gamma=float(d["gamma"]), w_o=float(d["w_o"]))
    return Edge(d["u"], d["v"], attr)


def _edge_to_doc(e: Edge) -> dict:
    d = {"u": e.u, "v": e.v, "type": e.attr.kind}
    if isinstance(e.attr, Traversability):
        if e.attr.w_t is not None:
            d["w_t"] = e.attr.w_t
        d["status"] = e.attr.status.value
    elif isinstance(e.attr, Observational):
        d["gamma"] = e.attr.gamma
        d["w_o"] = e.attr.w_o
    return d


def _graph_from_docs(layer, items, edges, where, build_child):
    g = Graph(layer)
    for item in items:
        idx = item["id"]
        if idx in g.nodes:
            raise InvariantError(f"{where}: duplicate node id {idx}")
        g.add_node(idx, build_child(item, f"{where}/{idx}"))
    for e in edges:
        g.add_edge(_edge_from_doc(e))
    g.validate(where)
    return g


def load_lsg(document) -> LayeredSceneGraph:
    """Build a validated graph from a document (dict, JSON string or file path)."""
    if isinstance(document, (str, Path)) and not str(document).lstrip().startswith("{"):
        try:
            document = json.loads(Path(document).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    elif isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc

    errors = sorted(_VALIDATOR.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        loc = "/".join(map(str, err.absolute_path)) or "<root>"
        raise SchemaError(f"{loc}: {err.message}")

    def feature(item, where):
        return NodeAttributes(pose=tuple(map(float, item["pose"])), layer=LayerId.FEATURE)

    def pose(item, where):
        nested = None
        if "features" in item or "edges" in item:
            nested = _graph_from_docs(
                LayerId.FEATURE, item.get("features", []), item.get("edges", []), where, feature
            )
        return NodeAttributes(pose=tuple(map(float, item["pose"])), layer=LayerId.POSE, nested=nested)

    def level(item, where):
        nested = _graph_from_docs(LayerId.POSE, item["poses"], item.get("edges", []), where, pose)
        return NodeAttributes(pose=tuple(map(float, item["pose"])), layer=LayerId.LEVEL, nested=nested)

    def target(item, where):
        nested = _graph_from_docs(LayerId.LEVEL, item["levels"], item.get("edges", []), where, level)
        status = item.get("inspection_status")
        return NodeAttributes(
            pose=tuple(map(float, item["pose"])),
            layer=LayerId.TARGET,
            nested=nested,
            inspection_status=None if status is None else float(status),
            transition_level=item.get("transition_level"),
        )

    g = _graph_from_docs(
        LayerId.TARGET, document["targets"], document.get("target_edges", []), "targets", target
    )
    lsg = LayeredSceneGraph(g)
    lsg.validate()
    return lsg


def save_lsg(lsg: LayeredSceneGraph) -> dict:
    """Serialize to the canonical document form (inverse of :func:`load_lsg`)."""

    def poses_doc(g):
        out = []
        for idx in sorted(g.nodes):
            n = g.nodes[idx]
            d = {"id": idx, "pose": list(n.pose)}
            if n.nested is not None:
                d["features"] = [
                    {"id": f, "pose": list(n.nested.nodes[f].pose)} for f in sorted(n.nested.nodes)
                ]
                d["edges"] = [_edge_to_doc(e) for e in n.nested.edges]
            out.append(d)
        return out

    targets = []
    for t in sorted(lsg.target_graph.nodes):
        tn = lsg.target_graph.nodes[t]
        d = {"id": t, "pose": list(tn.pose)}
        if tn.inspection_status is not None:
            d["inspection_status"] = tn.inspection_status
        if tn.transition_level is not None:
            d["transition_level"] = tn.transition_level
        levels = []
        for l in sorted(tn.nested.nodes):
            ln = tn.nested.nodes[l]
            levels.append(
                {
                    "id": l,
                    "pose": list(ln.pose),
                    "poses": poses_doc(ln.nested),
                    "edges": [_edge_to_doc(e) for e in ln.nested.edges],
                }
            )
        d["levels"] = levels
        d["edges"] = [_edge_to_doc(e) for e in tn.nested.edges]
        targets.append(d)
    return {"targets": targets, "target_edges": [_edge_to_doc(e) for e in lsg.target_graph.edges]}


def dumps_lsg(lsg: LayeredSceneGraph) -> str:
    return json.dumps(save_lsg(lsg), indent=1)


# --------------------------------------------------------------------------
# Operations

LOCALIZATION_TIE_TOL = 1e-9


def localize_robot_in_graph(lsg: LayeredSceneGraph, odom) -> LocalizedState:
    """Nearest Pose node over the whole graph; heading is ignored.

    Equidistant candidates resolve to the lexicographically smallest
    (target, level, pose) triple.
    """
    state = odom if isinstance(odom, RobotState) else RobotState.from_odom(odom)
    paths, pts = lsg.pose_index()
    if not paths:
        raise EmptyGraph("graph contains no Pose nodes")
    d = np.sqrt(((pts - state.position) ** 2).sum(axis=1))
    i = int(np.flatnonzero(d <= d.min() + LOCALIZATION_TIE_TOL)[0])
    return LocalizedState(*paths[i])


def set_edge_traversability(lsg: LayeredSceneGraph, scope, endpoints, status) -> LayeredSceneGraph:
    """Flip the status of the traversability edge between ``endpoints`` in ``scope``.

    Mutates ``lsg`` in place (single writer) and appends to its mutation log.
    """
    scope = tuple(scope)
    g = lsg.graph_at(scope)
    a, b = endpoints
    between = g.edges_between(a, b)
    if not between:
        raise NoSuchEdge(f"no edge between {a} and {b} in scope {scope}")
    idx = g.traversability_edge(a, b)
    if idx is None:
        raise NotTraversabilityEdge(f"edges between {a} and {b} in scope {scope} carry no traversability")
    status = Status(status)
    g.set_status(idx, status)
    lsg.mutations.append(Mutation(len(lsg.mutations) + 1, scope, a, b, status))
    return lsg


def nested_graph(lsg: LayeredSceneGraph, node: NodePath) -> Graph:
    attrs = lsg.node(node)
    if attrs.nested is None:
        raise NoNestedGraph(f"node {tuple(node)} ({attrs.layer.name}) has no nested graph")
    return attrs.nested
