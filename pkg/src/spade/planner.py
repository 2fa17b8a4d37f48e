"""Global/local hierarchical planning over the layered graph and the replanning cascade.

The Target graph is planned once per query (and again on global replans);
each global segment is refined inside the nested Level and Pose graphs of the
current target only.  Blocked hops escalate geometric detour -> local replan
-> global replan.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    EmptyPoseGraph,
    GoalOccupied,
    MissingTransitionLevel,
    NoLocalRoute,
    NoRoute,
    QueryNodeNotFound,
    StartOccupied,
)
from .geometry import (
    DEFAULT_DETOUR_BOUND,
    DEFAULT_ROBOT_RADIUS,
    GeometricPath,
    VoxelGrid,
    alt_local_geometric_path,
    is_collision_free,
)
from .lsg import (
    LayeredSceneGraph,
    LocalizedState,
    NodePath,
    RobotState,
    Status,
    localize_robot_in_graph,
    set_edge_traversability,
)
from .search import GlobalSegment, Route, eval_global_layer_path, get_best_path, segment_path, shortest_path
from .subsample import TaskMode, extract_domain_subgraph

ROBOT = ()  # pseudo node for the leg from the robot's position onto a plan


@dataclass
class PlannerConfig:
    robot_radius: float = DEFAULT_ROBOT_RADIUS
    detour_bound: float = DEFAULT_DETOUR_BOUND
    k_routes: int = 1
    kdtree_threshold: int = 64
    mode: TaskMode = TaskMode.PATH_FINDING


@dataclass(frozen=True)
class Query:
    target: int
    level: int | None = None
    pose: int | None = None

    def __post_init__(self):
        if self.pose is not None and self.level is None:
            raise ValueError("a pose terminal needs its level")


class Hop(NamedTuple):
    node: NodePath
    pose: tuple


@dataclass(frozen=True)
class TransitionNodes:
    level: NodePath
    pose: NodePath
    target_entry_pose: NodePath | None = None


@dataclass(frozen=True)
class LocalPlan:
    hops: tuple
    segment: GlobalSegment | None = None

    def pairs(self):
        return list(zip(self.hops, self.hops[1:]))

    @property
    def nodes(self) -> list:
        return [h.node for h in self.hops]

    @property
    def length(self) -> float:
        return float(sum(math.dist(a.pose, b.pose) for a, b in self.pairs()))


@dataclass
class GeometricDetour:
    hop: tuple
    path: GeometricPath


@dataclass
class LocalReplanned:
    plan: LocalPlan
    blocked_edge: tuple | None


@dataclass
class GlobalReplanned:
    route: Route
    plan: LocalPlan
    blocked_edge: tuple


@dataclass
class Infeasible:
    reason: str


ReplanOutcome = GeometricDetour | LocalReplanned | GlobalReplanned | Infeasible


# --------------------------------------------------------------------------
# node selection helpers

_TREES: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def nearest_pose(lsg: LayeredSceneGraph, level: NodePath, point, kdtree_threshold: int = 64) -> NodePath:
    """Pose node of the given level's Pose graph closest to ``point`` (smallest index on ties)."""
    g = lsg.graph_at(tuple(level))
    if not g.nodes:
        raise EmptyPoseGraph(f"Pose graph of level {tuple(level)} is empty")
    ids = sorted(g.nodes)
    p = np.asarray(point, float)
    if len(ids) > kdtree_threshold:
        cached = _TREES.get(g)
        if cached is None or cached[0] != ids:
            cached = (ids, cKDTree(np.asarray([g.nodes[i].pose for i in ids], float)))
            _TREES[g] = cached
        d, j = cached[1].query(p, k=min(len(ids), 8))
        best = d[0]
        idx = min(ids[jj] for dd, jj in zip(d, j) if dd <= best + 1e-9)
    else:
        pts = np.asarray([g.nodes[i].pose for i in ids], float)
        d = np.sqrt(((pts - p) ** 2).sum(axis=1))
        idx = ids[int(np.flatnonzero(d <= d.min() + 1e-9)[0])]
    return tuple(level) + (idx,)


def level_anchor(lsg: LayeredSceneGraph, level: NodePath, kdtree_threshold: int = 64) -> NodePath:
    """Pose through which a Level node is entered or left: the one nearest the Level node."""
    return nearest_pose(lsg, level, lsg.node(level).pose, kdtree_threshold)


def hop_edge(a: NodePath, b: NodePath):
    """(scope, u, v) of the graph edge a hop would use, or None for layer/target transitions."""
    if a and b and len(a) == len(b) and len(a) in (2, 3) and a[:-1] == b[:-1]:
        return (a[:-1], a[-1], b[-1])
    return None


def implicit_key(a: NodePath, b: NodePath) -> frozenset:
    return frozenset((tuple(a), tuple(b)))


# --------------------------------------------------------------------------
# operations


def eval_transition_nodes(
    lsg: LayeredSceneGraph, seg: GlobalSegment, loc: LocalizedState | None = None, kdtree_threshold: int = 64
) -> TransitionNodes:
    cur = lsg.node((seg.src,))
    dst = lsg.node((seg.dst,))
    for t, node in ((seg.src, cur), (seg.dst, dst)):
        if node.transition_level is None:
            raise MissingTransitionLevel(f"target {t} has no designated transition level")
    level = (seg.src, cur.transition_level)
    pose = nearest_pose(lsg, level, dst.pose, kdtree_threshold)
    entry = nearest_pose(lsg, (seg.dst, dst.transition_level), lsg.node(pose).pose, kdtree_threshold)
    return TransitionNodes(level, pose, entry)


def final_transition_nodes(
    lsg: LayeredSceneGraph, loc: LocalizedState, query: Query, kdtree_threshold: int = 64
) -> TransitionNodes:
    """Transition nodes for the last, intra-target stage toward queried Level/Pose terminals."""
    level = (loc.target, query.level)
    if query.pose is not None:
        pose = level + (query.pose,)
    elif loc.level == query.level:
        pose = loc.pose_path
    else:
        pose = level_anchor(lsg, level, kdtree_threshold)
    return TransitionNodes(level, pose, None)


def eval_local_layer_path(
    lsg: LayeredSceneGraph,
    seg: GlobalSegment | None,
    loc: LocalizedState,
    trans: TransitionNodes,
    *,
    blocked_implicit=frozenset(),
    searched: list | None = None,
    mode: TaskMode = TaskMode.PATH_FINDING,
    kdtree_threshold: int = 64,
) -> LocalPlan:
    """Pose route to the level exit, Level route, Pose route to the transition pose, target hop.

    Every search runs on a single nested graph of the current target.
    """
    t = loc.target

    def search(scope, a, b, stage):
        sg = extract_domain_subgraph(lsg.graph_at(scope), mode)
        if searched is not None:
            searched.append((sg.layer.name, len(sg.nodes)))
        try:
            return shortest_path(sg, a, b)
        except NoRoute:
            raise NoLocalRoute(stage, scope) from None

    nodes: list = []
    start = loc.pose
    if loc.level != trans.level[1]:
        levels = search((t,), loc.level, trans.level[1], "LevelStage")
        exit_pose = level_anchor(lsg, (t, loc.level), kdtree_threshold)
        route = search((t, loc.level), loc.pose, exit_pose[2], "PoseStage")
        nodes += [(t, loc.level, p) for p in route.nodes]
        nodes += [(t, l) for l in levels.nodes]
        start = level_anchor(lsg, trans.level, kdtree_threshold)[2]
    route = search(trans.level, start, trans.pose[2], "PoseStage")
    nodes += [trans.level + (p,) for p in route.nodes]
    if trans.target_entry_pose is not None:
        nodes.append(tuple(trans.target_entry_pose))

    for a, b in zip(nodes, nodes[1:]):
        if hop_edge(a, b) is None and implicit_key(a, b) in blocked_implicit:
            if len(a) == len(b) == 3 and a[0] != b[0]:
                raise NoLocalRoute("InterTargetStage", ())
            raise NoLocalRoute("TransitionStage", (t,))
    hops = tuple(Hop(n, tuple(lsg.node(n).pose)) for n in nodes)
    return LocalPlan(hops, seg)


def _jsonable_path(p):
    return list(p) if p != ROBOT else "robot"


def _round(v, nd=6):
    return [round(float(x), nd) for x in v]


class Mission:
    """Per-query planning state: route, active segment, localization and blocked hops."""

    def __init__(self, lsg: LayeredSceneGraph, query: Query, config: PlannerConfig, emit: Callable):
        self.lsg = lsg
        self.query = query
        self.config = config
        self.emit = emit
        self.route: Route | None = None
        self.segments: list[GlobalSegment] = []
        self.seg_index = 0
        self.loc: LocalizedState | None = None
        self.trans: TransitionNodes | None = None
        self.plan: LocalPlan | None = None
        self.blocked_implicit: set = set()
        self.searched: list = []
        self.outcomes: list = []

    @property
    def segment(self) -> GlobalSegment | None:
        if self.seg_index < len(self.segments):
            return self.segments[self.seg_index]
        return None

    def plan_global(self, event="GlobalPlan", blocked_edge=None) -> Route:
        sg = extract_domain_subgraph(self.lsg.target_graph, self.config.mode)
        self.searched.append((sg.layer.name, len(sg.nodes)))
        routes = eval_global_layer_path(sg, self.loc.target, self.query.target, self.config.k_routes)
        best = get_best_path(routes)
        self.route = best
        self.segments = segment_path(best)
        self.seg_index = 0
        detail = {"route": list(best.nodes), "cost": round(best.total_cost, 6), "alternatives": len(routes)}
        if blocked_edge is not None:
            detail["blocked_edge"] = _edge_detail(blocked_edge)
        self.emit(event, **detail)
        return best

    def plan_stage(self) -> LocalPlan:
        """Transition evaluation plus local plan for the active segment or the final stage."""
        seg = self.segment
        if seg is not None:
            self.trans = eval_transition_nodes(self.lsg, seg, self.loc, self.config.kdtree_threshold)
        else:
            self.trans = final_transition_nodes(self.lsg, self.loc, self.query, self.config.kdtree_threshold)
        self.emit(
            "TransitionEval",
            segment=None if seg is None else [seg.src, seg.dst],
            level=list(self.trans.level),
            pose=list(self.trans.pose),
            entry=None if self.trans.target_entry_pose is None else list(self.trans.target_entry_pose),
        )
        plan = self.local_plan()
        self.emit("LocalPlan", **_plan_detail(plan))
        return plan

    def local_plan(self) -> LocalPlan:
        self.plan = eval_local_layer_path(
            self.lsg,
            self.segment,
            self.loc,
            self.trans,
            blocked_implicit=self.blocked_implicit,
            searched=self.searched,
            mode=self.config.mode,
            kdtree_threshold=self.config.kdtree_threshold,
        )
        return self.plan


def _edge_detail(edge):
    if edge is None:
        return None
    if isinstance(edge, frozenset):
        a, b = sorted(edge)
        return {"implicit": [_jsonable_path(a), _jsonable_path(b)]}
    scope, u, v = edge
    return {"scope": list(scope), "u": u, "v": v}


def _plan_detail(plan: LocalPlan) -> dict:
    seg = plan.segment
    return {
        "segment": None if seg is None else [seg.src, seg.dst],
        "hops": [list(h.node) for h in plan.hops],
        "length": round(plan.length, 6),
    }


def handle_blocked_segment(
    mission: Mission,
    plan: LocalPlan,
    blocked_hop: tuple,
    grid: VoxelGrid,
    detour_from=None,
    detour_to=None,
) -> ReplanOutcome:
    """Run the cascade for one blocked hop and return the first stage that succeeds.

    ``detour_from``/``detour_to`` default to the hop's node poses; the driver
    passes the robot's position when the robot is already on the hop.
    """
    lsg, cfg = mission.lsg, mission.config
    a_node, b_node = blocked_hop
    a = np.asarray(detour_from if detour_from is not None else lsg.node(a_node).pose, float)
    b = np.asarray(detour_to if detour_to is not None else lsg.node(b_node).pose, float)
    hop_json = [_jsonable_path(a_node), _jsonable_path(b_node)]

    # geometric detour, no graph mutation
    reason = "Empty"
    try:
        path = alt_local_geometric_path(grid, a, b, cfg.robot_radius, cfg.detour_bound)
    except (StartOccupied, GoalOccupied) as exc:
        path, reason = None, type(exc).__name__
    if path is not None:
        mission.emit(
            "DetourFound", hop=hop_json, waypoints=len(path), length=round(path.length, 6), mutations=lsg.version
        )
        outcome = GeometricDetour(blocked_hop, path)
        mission.outcomes.append((outcome, lsg.version))
        return outcome
    mission.emit("DetourFailed", hop=hop_json, reason=reason)

    # local layer replan with the hop's edge blocked
    edge = hop_edge(a_node, b_node) if a_node != ROBOT else None
    if edge is not None:
        scope, u, v = edge
        if lsg.graph_at(scope).traversability_edge(u, v) is not None:
            set_edge_traversability(lsg, scope, (u, v), Status.BLOCKED)
        else:
            edge = None
    if edge is None:
        edge = implicit_key(a_node, b_node)
        mission.blocked_implicit.add(edge)
    try:
        if a_node == ROBOT:
            raise NoLocalRoute("ApproachStage", (mission.loc.target,))
        new_plan = mission.local_plan()
    except NoLocalRoute as exc:
        mission.emit("LocalReplanFailed", blocked_edge=_edge_detail(edge), stage=exc.stage, scope=list(exc.scope))
    else:
        mission.emit("LocalReplan", blocked_edge=_edge_detail(edge), **_plan_detail(new_plan))
        outcome = LocalReplanned(new_plan, edge if isinstance(edge, tuple) else None)
        mission.outcomes.append((outcome, lsg.version))
        return outcome

    # global layer replan from the current localization
    seg = mission.segment
    while True:
        if seg is None:
            mission.emit("Infeasible", reason="final stage blocked")
            return Infeasible("final stage blocked")
        target_edge = ((), seg.src, seg.dst)
        if lsg.target_graph.traversability_edge(seg.src, seg.dst) is not None:
            set_edge_traversability(lsg, (), (seg.src, seg.dst), Status.BLOCKED)
        try:
            route = mission.plan_global("GlobalReplan", blocked_edge=target_edge)
        except NoRoute:
            mission.emit("Infeasible", reason="no global route")
            return Infeasible("no global route")
        try:
            new_plan = mission.plan_stage()
        except NoLocalRoute as exc:
            mission.emit("LocalReplanFailed", blocked_edge=None, stage=exc.stage, scope=list(exc.scope))
            seg = mission.segment
            continue
        outcome = GlobalReplanned(route, new_plan, target_edge)
        mission.outcomes.append((outcome, lsg.version))
        return outcome


# --------------------------------------------------------------------------
# execution driver


@dataclass
class Leg:
    hop: tuple
    points: list = field(default_factory=list)

    @property
    def end(self):
        return self.points[-1]


class QueryDriver:
    """Stepwise executor for one query.

    The owner (usually the simulator) calls :meth:`check` after map updates,
    moves the robot along :meth:`remaining_path` and reports progress through
    :meth:`advance`.
    """

    def __init__(
        self,
        lsg: LayeredSceneGraph,
        grid: VoxelGrid,
        query: Query,
        robot: RobotState,
        config: PlannerConfig | None = None,
        clock: Callable[[], float] | None = None,
        events: list | None = None,
    ):
        self.lsg = lsg
        self.grid = grid
        self.query = query
        self.config = config or PlannerConfig()
        self.clock = clock or (lambda: 0.0)
        self.events = events if events is not None else []
        self.position = robot.position
        self.status = "active"
        self.legs: list[Leg] = []
        self.final_stage = False
        self._legs_rev = 0
        self._checked = None
        self.mission = Mission(lsg, query, self.config, self.emit)

    def emit(self, event: str, **detail) -> None:
        self.events.append({"t": round(self.clock(), 6), "event": event, "detail": detail})

    # -- planning

    def start(self) -> "QueryDriver":
        q = self.query
        target_path = (q.target,)
        terminal = target_path if q.level is None else (q.target, q.level) if q.pose is None else (q.target, q.level, q.pose)
        if not self.lsg.has_node(terminal):
            raise QueryNodeNotFound(f"query node {terminal} not in graph")
        loc = localize_robot_in_graph(self.lsg, self.position)
        self.mission.loc = self.planning_localization(loc.target)
        try:
            self.mission.plan_global("GlobalPlan")
        except NoRoute:
            self._finish("Infeasible", reason="no global route")
            return self
        self._begin_stage()
        return self

    def planning_localization(self, target: int) -> LocalizedState:
        """Nearest Pose node of ``target`` reachable from the robot by a free straight line.

        Falls back to the plain nearest Pose of the target.
        """
        paths, pts = self.lsg.pose_index()
        cand = [i for i, p in enumerate(paths) if p[0] == target]
        d = np.linalg.norm(pts[cand] - self.position, axis=1)
        order = sorted(range(len(cand)), key=lambda j: (round(float(d[j]), 9), paths[cand[j]]))
        for j in order[:8]:
            pose = pts[cand[j]]
            if is_collision_free(self.grid, self.position, pose, self.config.robot_radius):
                return LocalizedState(*paths[cand[j]])
        return LocalizedState(*paths[cand[order[0]]])

    def _begin_stage(self) -> None:
        if self.mission.segment is None:
            self.final_stage = True
            if self.query.level is None:
                if not self.legs:
                    self._arrive()
                return
        try:
            plan = self.mission.plan_stage()
        except NoLocalRoute as exc:
            self._finish("Infeasible", reason=f"no local route ({exc.stage})")
            return
        self._set_plan(plan)
        if self.final_stage and not self.legs:
            self._arrive()

    def _set_plan(self, plan: LocalPlan) -> None:
        legs = []
        first = np.asarray(plan.hops[0].pose, float)
        if np.linalg.norm(first - self.position) > 1e-9:
            legs.append(Leg((ROBOT, plan.hops[0].node), [self.position.copy(), first]))
        for a, b in plan.pairs():
            legs.append(Leg((a.node, b.node), [np.asarray(a.pose, float), np.asarray(b.pose, float)]))
        self.legs = legs
        self._legs_rev += 1

    def _arrive(self) -> None:
        loc = localize_robot_in_graph(self.lsg, self.position)
        self._finish("Arrived", localized=list(loc.pose_path))

    def _finish(self, event: str, **detail) -> None:
        self.emit(event, **detail)
        self.status = "arrived" if event == "Arrived" else "infeasible"
        self.legs = []

    # -- execution

    def remaining_path(self) -> GeometricPath:
        pts = [self.position]
        for leg in self.legs:
            pts.extend(leg.points[1:])
        return GeometricPath(pts, self.grid.version)

    def _find_blocked(self):
        r = self.config.robot_radius
        for k, leg in enumerate(self.legs):
            for p, q in zip(leg.points, leg.points[1:]):
                if not is_collision_free(self.grid, p, q, r):
                    return k, leg, p, q
        return None

    def check(self) -> None:
        """Collision-check the remaining legs against the map; run the cascade on the first blocked one."""
        for _ in range(256):
            if self.status != "active":
                return
            key = (self.grid.version, self._legs_rev)
            if key == self._checked:
                return
            found = self._find_blocked()
            if found is None:
                self._checked = key
                return
            k, leg, p, q = found
            self.emit(
                "Blocked",
                hop=[_jsonable_path(leg.hop[0]), _jsonable_path(leg.hop[1])],
                leg=k,
                segment=[_round(p), _round(q)],
                mutations=self.lsg.version,
            )
            cur_target = self.mission.loc.target if self.mission.segment is None else self.mission.segment.src
            self.mission.loc = self.planning_localization(cur_target)
            outcome = handle_blocked_segment(
                self.mission, self.mission.plan, leg.hop, self.grid, leg.points[0], leg.points[-1]
            )
            if isinstance(outcome, GeometricDetour):
                leg.points = [w.copy() for w in outcome.path.waypoints]
                leg.points[0] = np.asarray(leg.points[0], float)
                self._legs_rev += 1
            elif isinstance(outcome, (LocalReplanned, GlobalReplanned)):
                self._set_plan(outcome.plan)
            else:
                self.status = "infeasible"
                self.legs = []
                return
        raise RuntimeError("replanning cascade did not settle")

    def advance(self, position, traveled: float) -> None:
        """Consume ``traveled`` metres of the remaining legs, then localize and update stages."""
        remaining = float(traveled)
        while self.legs:
            leg = self.legs[0]
            while len(leg.points) > 1:
                seg_len = float(np.linalg.norm(leg.points[1] - leg.points[0]))
                if remaining + 1e-12 >= seg_len:
                    remaining -= seg_len
                    leg.points.pop(0)
                else:
                    leg.points[0] = leg.points[0] + (leg.points[1] - leg.points[0]) * (remaining / seg_len)
                    remaining = 0.0
                    break
            if len(leg.points) <= 1:
                self.legs.pop(0)
                continue
            break
        self.position = np.asarray(position, float)
        if self.legs:
            self.legs[0].points[0] = self.position.copy()
        if self.status != "active":
            return

        loc = localize_robot_in_graph(self.lsg, self.position)
        seg = self.mission.segment
        if seg is not None and loc.target == seg.dst:
            self.emit("SegmentDone", segment=[seg.src, seg.dst], localized=list(loc.pose_path))
            self.mission.seg_index += 1
            self.mission.loc = self.planning_localization(seg.dst)
            if self.mission.segment is not None or self.query.level is not None:
                self._begin_stage()
            else:
                self.final_stage = True
                if not self.legs:
                    self._arrive()
            return
        if not self.legs:
            if self.final_stage:
                self._arrive()
            else:
                self._finish("Infeasible", reason="plan exhausted before reaching the next target")


def plan_query(
    lsg: LayeredSceneGraph,
    grid: VoxelGrid,
    query: Query,
    robot: RobotState,
    config: PlannerConfig | None = None,
    clock=None,
    events=None,
) -> QueryDriver:
    """Localize, plan the global route and the first local stage; return the running driver."""
    return QueryDriver(lsg, grid, query, robot, config, clock, events).start()


def plan_static(lsg: LayeredSceneGraph, query: Query, position, config: PlannerConfig | None = None) -> tuple:
    """Global route plus the local plan of every segment, assuming no obstructions appear.

    Each segment is planned from the previous segment's entry pose.  Returns
    ``(route, plans, events)``; raises NoRoute / NoLocalRoute when planning fails.
    """
    config = config or PlannerConfig()
    terminal = (query.target,) + tuple(x for x in (query.level, query.pose) if x is not None)
    if not lsg.has_node(terminal):
        raise QueryNodeNotFound(f"query node {terminal} not in graph")
    events: list = []
    mission = Mission(lsg, query, config, lambda e, **d: events.append({"event": e, "detail": d}))
    mission.loc = localize_robot_in_graph(lsg, position)
    route = mission.plan_global()
    plans = []
    while mission.segment is not None:
        plan = mission.plan_stage()
        plans.append(plan)
        mission.loc = LocalizedState(*plan.hops[-1].node)
        mission.seg_index += 1
    if query.level is not None:
        plans.append(mission.plan_stage())
    return route, plans, events
