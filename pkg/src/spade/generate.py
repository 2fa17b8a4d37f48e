"""Synthetic layered graphs and voxel worlds for scenarios and benchmarks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParamError
from .geometry import DEFAULT_RESOLUTION, Obstruction, VoxelGrid, update_local_map
from .lsg import (
    Edge,
    Graph,
    LayeredSceneGraph,
    LayerId,
    NodeAttributes,
    Observational,
    Symbolic,
    Traversability,
)


@dataclass
class GeneratorParams:
    targets: int = 4
    spacing: float = 20.0
    levels: int = 1
    poses: int = 8
    traversable_frac: float = 1.0
    observational_frac: float = 0.0
    seed: int = 0
    # layout knobs
    jitter: float = 1.0
    ring_radius: float = 4.0
    building_half: float = 2.0
    level_height: float = 2.0
    pose_z: float = 1.0
    resolution: float = DEFAULT_RESOLUTION

    def validate(self) -> None:
        for name in ("targets", "levels", "poses"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ParamError(f"{name} must be an integer >= 1, got {v!r}")
        for name in ("traversable_frac", "observational_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParamError(f"{name} must lie in [0, 1], got {v!r}")
        if not self.spacing > 0 or not self.resolution > 0 or not self.ring_radius > 0:
            raise ParamError("spacing, resolution and ring_radius must be positive")
        if self.jitter < 0 or self.building_half < 0:
            raise ParamError("jitter and building_half must be non-negative")
        if self.building_half >= self.ring_radius:
            raise ParamError("building must fit inside the pose ring")
        if 2 * (self.ring_radius + self.jitter) + 2 >= self.spacing:
            raise ParamError("spacing too small for the pose rings")


def grid_shape(n: int) -> tuple:
    cols = math.ceil(math.sqrt(n))
    return cols, math.ceil(n / cols)


def grid_neighbor_pairs(n: int) -> list:
    """4-neighbour index pairs of ``n`` cells laid out row-major on a ``grid_shape`` grid."""
    cols, _ = grid_shape(n)
    pairs = []
    for i in range(n):
        r, c = divmod(i, cols)
        if c + 1 < cols and i + 1 < n:
            pairs.append((i, i + 1))
        if i + cols < n:
            pairs.append((i, i + cols))
    return pairs


def pose_ring(n: int, center, radius: float, z: float) -> list:
    return [
        (
            float(center[0] + radius * math.cos(2 * math.pi * k / n)),
            float(center[1] + radius * math.sin(2 * math.pi * k / n)),
            float(z),
        )
        for k in range(n)
    ]


def _pose_graph(n: int, center, radius: float, z: float) -> Graph:
    g = Graph(LayerId.POSE)
    for k, p in enumerate(pose_ring(n, center, radius, z)):
        g.add_node(k, NodeAttributes(pose=p, layer=LayerId.POSE))
    arc = 2 * math.pi * radius / n
    ring = [(k, (k + 1) % n) for k in range(n)] if n > 2 else [(0, 1)] if n == 2 else []
    for a, b in ring:
        g.add_edge(Edge(a, b, Traversability(arc)))
    for k in range(1, n):
        g.add_edge(Edge(0, k, Symbolic()))
    return g


def generate_synthetic_lsg(p: GeneratorParams) -> tuple[LayeredSceneGraph, VoxelGrid]:
    """Targets on a jittered grid, each with stacked Level nodes holding Pose rings.

    Level 0 is the designated transition level of every target.  The voxel
    world holds one full-height building box per target, inside its rings.
    """
    p.validate()
    rng = np.random.default_rng(p.seed)
    cols, _ = grid_shape(p.targets)
    jit = rng.uniform(-p.jitter, p.jitter, size=(p.targets, 2)) if p.jitter > 0 else np.zeros((p.targets, 2))
    centers = []
    for i in range(p.targets):
        r, c = divmod(i, cols)
        centers.append((round(c * p.spacing + jit[i, 0], 6), round(r * p.spacing + jit[i, 1], 6)))

    tg = _target_graph(centers, p)
    for a, b in grid_neighbor_pairs(p.targets):
        d = round(math.dist(centers[a], centers[b]), 6)
        if rng.random() < p.traversable_frac:
            tg.add_edge(Edge(a, b, Traversability(d)))
        if rng.random() < p.observational_frac:
            tg.add_edge(Edge(a, b, Observational(round(float(rng.uniform(0.5, 1.0)), 6), d)))

    lsg = LayeredSceneGraph(tg)
    lsg.validate()
    return lsg, world_grid(centers, p)


def _target_graph(centers, p: GeneratorParams) -> Graph:
    tg = Graph(LayerId.TARGET)
    for i, (x, y) in enumerate(centers):
        lg = Graph(LayerId.LEVEL)
        for l in range(p.levels):
            z = p.pose_z + l * p.level_height
            pg = _pose_graph(p.poses, (x, y), p.ring_radius, z)
            lg.add_node(l, NodeAttributes(pose=(x + p.ring_radius + 1.0, y, z), layer=LayerId.LEVEL, nested=pg))
        for l in range(p.levels - 1):
            lg.add_edge(Edge(l, l + 1, Traversability(p.level_height)))
        tg.add_node(
            i,
            NodeAttributes(pose=(x, y, p.pose_z), layer=LayerId.TARGET, nested=lg, transition_level=0),
        )
    return tg


def ring_world(centers, target_edges, p: GeneratorParams) -> tuple[LayeredSceneGraph, VoxelGrid]:
    """Same construction as :func:`generate_synthetic_lsg` for explicit target positions and edges.

    Target edges are traversable with Euclidean weight.
    """
    p.validate()
    centers = [(float(x), float(y)) for x, y in centers]
    tg = _target_graph(centers, p)
    for a, b in target_edges:
        tg.add_edge(Edge(a, b, Traversability(round(math.dist(centers[a], centers[b]), 6))))
    lsg = LayeredSceneGraph(tg)
    lsg.validate()
    return lsg, world_grid(centers, p)


def world_bounds(centers, p: GeneratorParams) -> tuple:
    margin = p.ring_radius + 3.0
    xs = [c[0] for c in centers]
    ys = [c[1] for c in centers]
    top = p.pose_z + (p.levels - 1) * p.level_height + 2.0
    lo = (math.floor(min(xs) - margin), math.floor(min(ys) - margin), 0.0)
    hi = (math.ceil(max(xs) + margin), math.ceil(max(ys) + margin), top)
    return lo, hi


def building_boxes(centers, p: GeneratorParams) -> list:
    """One full-height box per target as (center, half_extents)."""
    if p.building_half <= 0:
        return []
    _, hi = world_bounds(centers, p)
    zc = hi[2] / 2
    return [((x, y, zc), (p.building_half, p.building_half, zc)) for x, y in centers]


def world_grid(centers, p: GeneratorParams) -> VoxelGrid:
    lo, hi = world_bounds(centers, p)
    grid = VoxelGrid.covering(lo, hi, p.resolution)
    for c, h in building_boxes(centers, p):
        update_local_map(grid, Obstruction(c, h))
    grid.version = 0
    return grid


# --------------------------------------------------------------------------
# benchmark graphs


def multidomain_graph(n: int, traversable_frac: float = 1 / 3, seed: int = 0, layer=LayerId.TARGET) -> Graph:
    """Single multi-domain layer graph for timing searches.

    Nodes sit on a jittered unit grid joined by traversable 4-neighbour edges.
    Symbolic and observational edges are added between nearby node pairs
    (Chebyshev grid distance <= 2) until traversable edges make up
    ``traversable_frac`` of the total.
    """
    if n < 2:
        raise ParamError("benchmark graphs need at least 2 nodes")
    if not 0 < traversable_frac <= 1:
        raise ParamError("traversable_frac must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    cols, rows = grid_shape(n)
    xy = np.array([divmod(i, cols)[::-1] for i in range(n)], float) + rng.uniform(-0.25, 0.25, size=(n, 2))
    g = Graph(layer)
    for i in range(n):
        g.add_node(i, NodeAttributes(pose=(float(xy[i, 0]), float(xy[i, 1]), 0.0), layer=layer))
    pairs = grid_neighbor_pairs(n)
    for a, b in pairs:
        g.add_edge(Edge(a, b, Traversability(round(float(np.linalg.norm(xy[a] - xy[b])), 9))))
    extra = round(len(pairs) * (1.0 / traversable_frac - 1.0))
    used = set()
    k = tries = 0
    while k < extra:
        tries += 1
        if tries > 100 * (extra + 10):
            raise ParamError(f"cannot place {extra} non-traversable edges on {n} nodes")
        a = int(rng.integers(n))
        r, c = divmod(a, cols)
        dr, dc = (int(v) for v in rng.integers(-2, 3, size=2))
        b = (r + dr) * cols + (c + dc)
        if not (dr or dc) or not 0 <= c + dc < cols or not 0 <= b < n:
            continue
        kind = "observational" if k % 2 else "symbolic"
        key = (min(a, b), max(a, b), kind)
        if key in used:
            continue
        used.add(key)
        if kind == "observational":
            d = float(np.linalg.norm(xy[a] - xy[b]))
            g.add_edge(Edge(a, b, Observational(round(float(rng.uniform(0.5, 1.0)), 6), round(d, 9))))
        else:
            g.add_edge(Edge(a, b, Symbolic()))
        k += 1
    return g
