"""Boolean voxel map, swept-segment collision checks and local detour search.

Space outside the grid window counts as free.  Detour searches never leave
the grid's vertical extent.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import GoalOccupied, InvariantViolation, OutOfBounds, StartOccupied

DEFAULT_RESOLUTION = 0.2
DEFAULT_ROBOT_RADIUS = 0.3
DEFAULT_DETOUR_BOUND = 20.0

_GOLDEN = (math.sqrt(5) - 1) / 2
_EPS = 1e-9


@dataclass
class VoxelGrid:
    resolution: float = DEFAULT_RESOLUTION
    origin: tuple = (0.0, 0.0, 0.0)
    extent: tuple = (1, 1, 1)
    occupancy: np.ndarray | None = None
    version: int = 0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        self.origin = tuple(float(c) for c in self.origin)
        self.extent = tuple(int(n) for n in self.extent)
        if any(n < 1 for n in self.extent):
            raise ValueError("extent must be positive in every axis")
        if self.occupancy is None:
            self.occupancy = np.zeros(self.extent, dtype=bool)
        elif self.occupancy.shape != self.extent:
            raise ValueError("occupancy shape does not match extent")

    @classmethod
    def covering(cls, lo, hi, resolution=DEFAULT_RESOLUTION) -> "VoxelGrid":
        lo = np.asarray(lo, float)
        extent = np.ceil((np.asarray(hi, float) - lo) / resolution - _EPS).astype(int)
        return cls(resolution, tuple(lo), tuple(np.maximum(extent, 1)))

    @property
    def origin_array(self) -> np.ndarray:
        return np.asarray(self.origin)

    @property
    def upper(self) -> np.ndarray:
        return self.origin_array + np.asarray(self.extent) * self.resolution

    @property
    def occupied_count(self) -> int:
        return int(self.occupancy.sum())

    def occupied_indices(self) -> list:
        return [tuple(int(c) for c in ijk) for ijk in np.argwhere(self.occupancy)]

    def voxel_of(self, point) -> tuple:
        return tuple(np.floor((np.asarray(point, float) - self.origin_array) / self.resolution).astype(int))

    def center_of(self, ijk) -> np.ndarray:
        return self.origin_array + (np.asarray(ijk, float) + 0.5) * self.resolution

    def window(self, lo, hi) -> np.ndarray:
        """Occupancy over the inclusive index box [lo, hi]; cells outside the grid are free."""
        lo = np.asarray(lo, int)
        hi = np.asarray(hi, int)
        out = np.zeros(tuple(hi - lo + 1), dtype=bool)
        src_lo = np.maximum(lo, 0)
        src_hi = np.minimum(hi, np.asarray(self.extent) - 1)
        if np.any(src_hi < src_lo):
            return out
        dst_lo = src_lo - lo
        dst_hi = src_hi - lo
        out[
            dst_lo[0] : dst_hi[0] + 1, dst_lo[1] : dst_hi[1] + 1, dst_lo[2] : dst_hi[2] + 1
        ] = self.occupancy[
            src_lo[0] : src_hi[0] + 1, src_lo[1] : src_hi[1] + 1, src_lo[2] : src_hi[2] + 1
        ]
        return out

    def copy(self) -> "VoxelGrid":
        return VoxelGrid(self.resolution, self.origin, self.extent, self.occupancy.copy(), self.version)

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "origin": list(self.origin),
            "extent": list(self.extent),
            "occupied": [list(ijk) for ijk in self.occupied_indices()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VoxelGrid":
        grid = cls(d.get("resolution", DEFAULT_RESOLUTION), d.get("origin", (0, 0, 0)), d["extent"])
        occ = np.asarray(d.get("occupied", []), dtype=int).reshape(-1, 3)
        if len(occ):
            if np.any(occ < 0) or np.any(occ >= np.asarray(grid.extent)):
                raise ValueError("occupied index outside extent")
            grid.occupancy[occ[:, 0], occ[:, 1], occ[:, 2]] = True
        return grid


@dataclass(frozen=True)
class Obstruction:
    center: tuple
    half_extents: tuple
    activation_time: float = 0.0

    def __post_init__(self):
        if any(not h > 0 for h in self.half_extents):
            raise ValueError("obstruction half-extents must be positive")

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.center, float) - np.asarray(self.half_extents, float)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.center, float) + np.asarray(self.half_extents, float)


@dataclass
class GeometricPath:
    waypoints: list
    version: int = 0

    def __post_init__(self):
        self.waypoints = [np.asarray(w, dtype=float) for w in self.waypoints]

    def __len__(self):
        return len(self.waypoints)

    @property
    def length(self) -> float:
        return float(sum(np.linalg.norm(b - a) for a, b in zip(self.waypoints, self.waypoints[1:])))


# --------------------------------------------------------------------------
# collision checks


def _box_distance(points, lo, hi):
    """Euclidean distance from each point (P,3) to each box (K,3) -> (P,K)."""
    p = points[:, None, :]
    gap = np.maximum(np.maximum(lo[None] - p, p - hi[None]), 0.0)
    return np.sqrt((gap * gap).sum(axis=2))


def _nearby_boxes(grid: VoxelGrid, a, b, margin):
    lo_pt = np.minimum(a, b) - margin
    hi_pt = np.maximum(a, b) + margin
    lo = np.floor((lo_pt - grid.origin_array) / grid.resolution).astype(int)
    hi = np.floor((hi_pt - grid.origin_array) / grid.resolution).astype(int)
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, np.asarray(grid.extent) - 1)
    if np.any(hi < lo):
        return None
    sub = grid.occupancy[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1]
    idx = np.argwhere(sub)
    if not len(idx):
        return None
    box_lo = grid.origin_array + (idx + lo) * grid.resolution
    return box_lo, box_lo + grid.resolution


def _segment_box_min_distance(a, d, lo, hi, iters=70):
    """Minimum over t in [0,1] of dist(a + t d, box) per box; the objective is convex in t."""

    def f(t):
        p = a[None, :] + t[:, None] * d[None, :]
        gap = np.maximum(np.maximum(lo - p, p - hi), 0.0)
        return np.sqrt((gap * gap).sum(axis=1))

    left = np.zeros(len(lo))
    right = np.ones(len(lo))
    best = np.minimum(f(left), f(right))
    for _ in range(iters):
        m1 = left + (1 - _GOLDEN) * (right - left)
        m2 = left + _GOLDEN * (right - left)
        f1, f2 = f(m1), f(m2)
        best = np.minimum(best, np.minimum(f1, f2))
        keep_left = f1 <= f2
        right = np.where(keep_left, m2, right)
        left = np.where(keep_left, left, m1)
    return best


def is_collision_free(grid: VoxelGrid, a, b, robot_radius: float = DEFAULT_ROBOT_RADIUS) -> bool:
    """True iff the segment a-b swept by a sphere of ``robot_radius`` touches no occupied voxel.

    The segment is stepped at half-voxel spacing for a fast reject; voxels
    that survive are resolved with an exact convex minimization so the
    result does not depend on the step size.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    # canonical direction makes the check exactly symmetric
    if tuple(b) < tuple(a):
        a, b = b, a
    boxes = _nearby_boxes(grid, a, b, robot_radius + grid.resolution)
    if boxes is None:
        return True
    lo, hi = boxes
    d = b - a
    length = float(np.linalg.norm(d))
    n = max(1, int(math.ceil(length / (grid.resolution / 2))))
    ts = np.linspace(0.0, 1.0, n + 1)
    samples = a[None, :] + ts[:, None] * d[None, :]
    dist = _box_distance(samples, lo, hi)
    if np.any(dist <= robot_radius):
        return False
    step = length / n
    # between samples the segment can only get closer by the half-step chord
    near = dist.min(axis=0) <= robot_radius + step
    if not np.any(near):
        return True
    exact = _segment_box_min_distance(a, d, lo[near], hi[near])
    return bool(np.all(exact > robot_radius))


def eval_segment_traversability(grid: VoxelGrid, plan, robot_radius: float = DEFAULT_ROBOT_RADIUS) -> list:
    """Per-hop collision results for a local plan, in hop order."""
    out = []
    for a, b in zip(plan.hops, plan.hops[1:]):
        out.append(((a.node, b.node), is_collision_free(grid, a.pose, b.pose, robot_radius)))
    return out


def first_blocked_hop(results):
    for hop, ok in results:
        if not ok:
            return hop
    return None


# --------------------------------------------------------------------------
# detour search

_OFFSETS = [o for o in itertools.product((-1, 0, 1), repeat=3) if o != (0, 0, 0)]
_OFFSET_COST = [math.sqrt(sum(c * c for c in o)) for o in _OFFSETS]


def _inflation_kernel(radius: float, resolution: float):
    """Offsets whose voxel box lies within ``radius`` of a voxel center."""
    m = int(math.ceil(radius / resolution + 0.5))
    r = np.arange(-m, m + 1)
    dx, dy, dz = np.meshgrid(r, r, r, indexing="ij")
    gap = np.maximum(np.abs(np.stack([dx, dy, dz])) - 0.5, 0.0) * resolution
    return np.sqrt((gap * gap).sum(axis=0)) <= radius, m


def shortcut(grid: VoxelGrid, waypoints, robot_radius: float) -> list:
    """Line-of-sight string pulling: extend each leg while the straight segment stays free."""
    pts = [np.asarray(w, float) for w in waypoints]
    if len(pts) <= 2:
        return pts
    out = [pts[0]]
    i = 0
    while i < len(pts) - 1:
        j = i + 1
        while j + 1 < len(pts) and is_collision_free(grid, pts[i], pts[j + 1], robot_radius):
            j += 1
        out.append(pts[j])
        i = j
    return out


def alt_local_geometric_path(
    grid: VoxelGrid,
    a,
    b,
    robot_radius: float = DEFAULT_ROBOT_RADIUS,
    bound: float = DEFAULT_DETOUR_BOUND,
) -> GeometricPath | None:
    """26-connected voxel A* from a to b inside a box of side ``bound`` centred between them.

    Returns None when no free voxel path exists inside the box.  Raises
    StartOccupied / GoalOccupied when an endpoint cannot reach any free voxel.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if is_collision_free(grid, a, b, robot_radius):
        return GeometricPath([a, b], grid.version)
    res = grid.resolution
    mid = (a + b) / 2
    half = np.maximum(bound / 2, np.abs(b - a) / 2 + 2 * res)
    lo = np.floor((mid - half - grid.origin_array) / res).astype(int)
    hi = np.floor((mid + half - grid.origin_array) / res).astype(int)
    lo[2] = max(lo[2], 0)
    hi[2] = min(hi[2], grid.extent[2] - 1)
    if hi[2] < lo[2]:
        return None

    # voxel centres must clear obstacles by radius plus half a voxel diagonal,
    # which keeps every straight move between neighbouring centres collision-free
    clearance = robot_radius + res * math.sqrt(3) / 2
    kernel, m = _inflation_kernel(clearance, res)
    occ = grid.window(lo - m, hi + m)
    blocked = ndimage.binary_dilation(occ, structure=kernel)[m:-m, m:-m, m:-m]
    shape = blocked.shape

    def endpoint(p, exc):
        base = np.asarray(grid.voxel_of(p)) - lo
        cands = []
        for off in [(0, 0, 0)] + _OFFSETS:
            ijk = base + off
            if np.any(ijk < 0) or np.any(ijk >= shape) or blocked[tuple(ijk)]:
                continue
            c = grid.center_of(ijk + lo)
            cands.append((float(np.linalg.norm(c - p)), tuple(int(x) for x in ijk), c))
        for _, ijk, c in sorted(cands, key=lambda t: (t[0], t[1])):
            if is_collision_free(grid, p, c, robot_radius):
                return ijk
        raise exc(f"no free voxel reachable from {p.tolist()}")

    start = endpoint(a, StartOccupied)
    goal = endpoint(b, GoalOccupied)

    labels, _ = ndimage.label(~blocked, structure=np.ones((3, 3, 3), dtype=bool))
    if labels[start] != labels[goal]:
        return None

    goal_arr = np.asarray(goal, float)

    def h(ijk):
        return res * math.sqrt(
            (ijk[0] - goal_arr[0]) ** 2 + (ijk[1] - goal_arr[1]) ** 2 + (ijk[2] - goal_arr[2]) ** 2
        )

    g_cost = {start: 0.0}
    parent = {start: None}
    closed = set()
    heap = [(h(start), 0.0, start)]
    sx, sy, sz = shape
    while heap:
        _, g, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == goal:
            break
        closed.add(cur)
        x, y, z = cur
        for (ox, oy, oz), step in zip(_OFFSETS, _OFFSET_COST):
            nx, ny, nz = x + ox, y + oy, z + oz
            if not (0 <= nx < sx and 0 <= ny < sy and 0 <= nz < sz):
                continue
            nxt = (nx, ny, nz)
            if nxt in closed or blocked[nxt]:
                continue
            ng = g + step * res
            if ng < g_cost.get(nxt, math.inf) - 1e-12:
                g_cost[nxt] = ng
                parent[nxt] = cur
                heapq.heappush(heap, (ng + h(nxt), ng, nxt))
    if goal not in parent:
        return None

    cells = []
    node = goal
    while node is not None:
        cells.append(node)
        node = parent[node]
    cells.reverse()
    raw = [a] + [grid.center_of(np.asarray(c) + lo) for c in cells] + [b]
    pts = shortcut(grid, raw, robot_radius)
    path = GeometricPath(pts, grid.version)
    _assert_sound(grid, path, robot_radius)
    return path


def _assert_sound(grid, path: GeometricPath, robot_radius: float) -> None:
    for p, q in zip(path.waypoints, path.waypoints[1:]):
        if not is_collision_free(grid, p, q, robot_radius):
            raise InvariantViolation(f"geometric path leg {p.tolist()} -> {q.tolist()} is in collision")


def eval_geometric_path(
    plan, grid: VoxelGrid, robot_radius: float = DEFAULT_ROBOT_RADIUS, detours=None, shortcut_path=True
) -> GeometricPath:
    """Waypoints for a local plan, splicing ``detours`` (hop index -> GeometricPath) in place of hops."""
    detours = detours or {}
    pts = [np.asarray(plan.hops[0].pose, float)]
    for k in range(len(plan.hops) - 1):
        if k in detours:
            pts.extend(detours[k].waypoints[1:])
        else:
            pts.append(np.asarray(plan.hops[k + 1].pose, float))
    dedup = [pts[0]]
    for p in pts[1:]:
        if np.linalg.norm(p - dedup[-1]) > _EPS:
            dedup.append(p)
    if shortcut_path:
        dedup = shortcut(grid, dedup, robot_radius)
    path = GeometricPath(dedup, grid.version)
    _assert_sound(grid, path, robot_radius)
    return path


def update_local_map(grid: VoxelGrid, obstruction: Obstruction) -> VoxelGrid:
    """Mark every voxel overlapping the obstruction box (positive volume) occupied."""
    res = grid.resolution
    x = (obstruction.lo - grid.origin_array) / res
    y = (obstruction.hi - grid.origin_array) / res
    i_lo = np.floor(x + _EPS).astype(int)
    i_hi = np.ceil(y - _EPS).astype(int) - 1
    i_lo = np.maximum(i_lo, 0)
    i_hi = np.minimum(i_hi, np.asarray(grid.extent) - 1)
    if np.any(i_hi < i_lo):
        raise OutOfBounds("obstruction does not intersect the grid")
    grid.occupancy[i_lo[0] : i_hi[0] + 1, i_lo[1] : i_hi[1] + 1, i_lo[2] : i_hi[2] + 1] = True
    grid.version += 1
    return grid
