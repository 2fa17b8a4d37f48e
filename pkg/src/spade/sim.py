"""Deterministic fixed-step scenario runner with appearing obstructions and an ideal point robot."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import OutOfBounds, ScenarioError, SpadeError
from .geometry import (
    DEFAULT_DETOUR_BOUND,
    DEFAULT_ROBOT_RADIUS,
    GeometricPath,
    Obstruction,
    VoxelGrid,
    update_local_map,
)
from .lsg import LayeredSceneGraph, RobotState, load_lsg, localize_robot_in_graph, normalize_angle
from .planner import PlannerConfig, Query, QueryDriver

TERMINAL = ("Arrived", "Infeasible")
# detail keys that carry wall-clock measurements
WALL_CLOCK_KEYS = ("wall_time_s",)


@dataclass
class Scenario:
    lsg: dict  # LSG document
    grid: dict  # voxel grid document, optionally with static "boxes"
    obstructions: list = field(default_factory=list)  # list[Obstruction]
    queries: list = field(default_factory=list)  # list[(t, Query)]
    start: tuple = (0.0, 0.0, 0.0, 0.0)
    speed: float = 1.0
    sensing_radius: float = 8.0
    seed: int = 0
    dt: float = 0.1
    robot_radius: float = DEFAULT_ROBOT_RADIUS
    detour_bound: float = DEFAULT_DETOUR_BOUND
    max_time: float = 900.0
    name: str = ""

    def __post_init__(self):
        ts = [o.activation_time for o in self.obstructions]
        qs = [t for t, _ in self.queries]
        if any(t < 0 for t in ts + qs):
            raise ScenarioError("event and query times must be non-negative")
        if ts != sorted(ts) or qs != sorted(qs):
            raise ScenarioError("obstruction and query times must be sorted")
        if not self.dt > 0 or not self.speed > 0 or not self.sensing_radius > 0:
            raise ScenarioError("dt, speed and sensing_radius must be positive")
        if len(self.start) != 4:
            raise ScenarioError("robot start must be (x, y, z, psi)")

    def to_dict(self) -> dict:
        out = {
            "lsg": self.lsg,
            "grid": self.grid,
            "obstructions": [
                {"center": list(o.center), "half_extents": list(o.half_extents), "t": o.activation_time}
                for o in self.obstructions
            ],
            "queries": [
                {"t": t, "target": q.target, **({"level": q.level} if q.level is not None else {}),
                 **({"pose": q.pose} if q.pose is not None else {})}
                for t, q in self.queries
            ],
            "robot": {"start": list(self.start), "speed": self.speed},
            "sensing_radius": self.sensing_radius,
            "seed": self.seed,
            "dt": self.dt,
            "robot_radius": self.robot_radius,
            "detour_bound": self.detour_bound,
            "max_time": self.max_time,
        }
        if self.name:
            out["name"] = self.name
        return out

    def build_world(self) -> tuple[LayeredSceneGraph, VoxelGrid]:
        """Fresh graph and grid instances; runs never share mutable state."""
        try:
            lsg = load_lsg(self.lsg)
            grid = VoxelGrid.from_dict(self.grid)
            for box in self.grid.get("boxes", []):
                update_local_map(grid, Obstruction(tuple(box["center"]), tuple(box["half_extents"])))
        except (SpadeError, KeyError, ValueError, TypeError) as exc:
            raise ScenarioError(f"cannot build scenario world: {exc}") from exc
        grid.version = 0
        return lsg, grid


def load_scenario(source, base_dir=None) -> Scenario:
    """Scenario from a dict, a JSON string or a file path.

    ``lsg`` and ``grid`` may be inline objects or paths relative to the file.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        try:
            if text.lstrip().startswith("{"):
                doc = json.loads(text)
            else:
                path = Path(text)
                doc = json.loads(path.read_text(encoding="utf-8"))
                base_dir = base_dir or path.parent
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from exc
    base = Path(base_dir or ".")

    def resolve(ref, what):
        if isinstance(ref, dict):
            return ref
        if isinstance(ref, str):
            try:
                return json.loads((base / ref).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ScenarioError(f"cannot load {what} from {ref!r}: {exc}") from exc
        raise ScenarioError(f"{what} must be an object or a path")

    try:
        robot = doc.get("robot", {})
        scenario = Scenario(
            lsg=resolve(doc["lsg"], "lsg"),
            grid=resolve(doc["grid"], "grid"),
            obstructions=[
                Obstruction(tuple(o["center"]), tuple(o["half_extents"]), float(o.get("t", 0.0)))
                for o in doc.get("obstructions", [])
            ],
            queries=[
                (float(q.get("t", 0.0)), Query(int(q["target"]), q.get("level"), q.get("pose")))
                for q in doc.get("queries", [])
            ],
            start=tuple(float(c) for c in robot.get("start", (0.0, 0.0, 0.0, 0.0))),
            speed=float(robot.get("speed", 1.0)),
            sensing_radius=float(doc.get("sensing_radius", 8.0)),
            seed=int(doc.get("seed", 0)),
            dt=float(doc.get("dt", 0.1)),
            robot_radius=float(doc.get("robot_radius", DEFAULT_ROBOT_RADIUS)),
            detour_bound=float(doc.get("detour_bound", DEFAULT_DETOUR_BOUND)),
            max_time=float(doc.get("max_time", 900.0)),
            name=str(doc.get("name", "")),
        )
    except ScenarioError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"malformed scenario: {exc!r}") from exc
    return scenario


def step_robot(state: RobotState, path: GeometricPath, dt: float, speed: float) -> RobotState:
    """Move ``speed * dt`` metres along the polyline from its first waypoint, clamped at the end.

    Heading follows the horizontal direction of the segment being travelled.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    pts = path.waypoints
    if not pts:
        raise ValueError("path is empty")
    remaining = speed * dt
    psi = state.psi
    pos = pts[0]
    for a, b in zip(pts, pts[1:]):
        d = b - a
        seg = float(np.linalg.norm(d))
        if seg == 0.0:
            continue
        if math.hypot(d[0], d[1]) > 1e-12:
            psi = math.atan2(d[1], d[0])
        if remaining < seg:
            pos = a + d * (remaining / seg)
            break
        remaining -= seg
        pos = b
    return RobotState(float(pos[0]), float(pos[1]), float(pos[2]), normalize_angle(psi))


@dataclass
class ScenarioTrace:
    events: list
    statuses: list
    metrics: dict
    positions: list = field(default_factory=list)
    missions: list = field(default_factory=list)  # planner state per query, for inspection
    grid: VoxelGrid | None = None
    lsg: LayeredSceneGraph | None = None

    def event_names(self) -> list:
        return [e["event"] for e in self.events]

    def to_jsonl(self, with_summary: bool = True) -> str:
        lines = [json.dumps(e, sort_keys=True) for e in self.events]
        if with_summary:
            lines.append(json.dumps({"summary": {"statuses": self.statuses, "metrics": self.metrics}}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def deterministic_view(self) -> str:
        """Serialized trace with wall-clock fields removed."""
        metrics = {k: v for k, v in self.metrics.items() if k not in WALL_CLOCK_KEYS}
        lines = [json.dumps(e, sort_keys=True) for e in self.events]
        lines.append(json.dumps({"statuses": self.statuses, "metrics": metrics}, sort_keys=True))
        return "\n".join(lines)


def _clean(obj):
    """JSON-safe copy with numpy scalars converted and floats rounded to 6 digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round(float(obj), 6)
    return obj


def run_scenario(s: Scenario, record_positions: bool = True) -> ScenarioTrace:
    """Fixed-step loop: activate, sense, issue queries, check, move, localize."""
    wall0 = time.perf_counter()
    lsg, grid = s.build_world()
    for _, q in s.queries:
        terminal = (q.target,) + tuple(x for x in (q.level, q.pose) if x is not None)
        if not lsg.has_node(terminal):
            raise ScenarioError(f"query node {terminal} not in graph")

    events: list = []
    now = [0.0]
    clock = lambda: now[0]  # noqa: E731
    config = PlannerConfig(robot_radius=s.robot_radius, detour_bound=s.detour_bound)
    robot = RobotState(*s.start)
    pending_obs = list(s.obstructions)
    unsensed: list = []
    queries = list(s.queries)
    driver: QueryDriver | None = None
    statuses, missions, positions = [], [], []
    traveled = 0.0
    k = 0

    def emit(event, **detail):
        events.append({"t": round(now[0], 6), "event": event, "detail": detail})

    while True:
        now[0] = round(k * s.dt, 9)
        while pending_obs and pending_obs[0].activation_time <= now[0] + 1e-12:
            unsensed.append(pending_obs.pop(0))
        still = []
        for obs in unsensed:
            if float(np.linalg.norm(np.asarray(obs.center, float) - robot.position)) <= s.sensing_radius:
                try:
                    update_local_map(grid, obs)
                except OutOfBounds:
                    pass
                emit(
                    "ObstructionSensed",
                    center=list(obs.center),
                    half_extents=list(obs.half_extents),
                    activated=obs.activation_time,
                    map_version=grid.version,
                )
            else:
                still.append(obs)
        unsensed = still

        if driver is None and queries and queries[0][0] <= now[0] + 1e-12:
            _, q = queries.pop(0)
            driver = QueryDriver(lsg, grid, q, robot, config, clock, events)
            driver.start()

        if driver is not None:
            driver.check()
            if driver.status == "active":
                if driver.legs:
                    path = driver.remaining_path()
                    new = step_robot(robot, path, s.dt, s.speed)
                    step = min(s.speed * s.dt, path.length)
                    traveled += float(np.linalg.norm(new.position - robot.position))
                    robot = new
                    now[0] = round((k + 1) * s.dt, 9)
                    driver.advance(robot.position, step)
                else:
                    driver.advance(robot.position, 0.0)
            if driver.status != "active":
                statuses.append("Arrived" if driver.status == "arrived" else "Infeasible")
                missions.append(driver.mission)
                driver = None
        if record_positions:
            positions.append(robot.position.copy())

        if driver is None and not queries:
            break
        k += 1
        if k * s.dt > s.max_time:
            if driver is not None:
                driver._finish("Infeasible", reason="time limit")
                statuses.append("Infeasible")
                missions.append(driver.mission)
            else:
                emit("Infeasible", reason="time limit")
                statuses.append("Infeasible")
            break

    loc = localize_robot_in_graph(lsg, robot.position)
    for ev in events:
        ev["detail"] = _clean(ev["detail"])
    counts: dict = {}
    for ev in events:
        counts[ev["event"]] = counts.get(ev["event"], 0) + 1
    metrics = {
        "steps": k + 1,
        "sim_time_s": round(now[0], 6),
        "distance_m": round(traveled, 6),
        "final_position": _clean(robot.position),
        "final_localized": list(loc.pose_path),
        "mutations": lsg.version,
        "map_version": grid.version,
        "event_counts": dict(sorted(counts.items())),
        "max_searched_nodes": max((n for m in missions for _, n in m.searched), default=0),
        "wall_time_s": round(time.perf_counter() - wall0, 6),
    }
    return ScenarioTrace(events, statuses, metrics, positions, missions, grid, lsg)

