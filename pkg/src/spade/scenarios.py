"""Built-in scenario fixtures: pose-ring blocking, walled corridor, small obstacle, urban grid."""

from __future__ import annotations

import numpy as np

from .generate import GeneratorParams, building_boxes, grid_neighbor_pairs, pose_ring, ring_world
from .geometry import Obstruction
from .lsg import save_lsg
from .planner import Query
from .sim import Scenario

WALL_HALF_THICKNESS = 0.15
WORLD_TOP = 3.0  # grid z extent for single-level worlds


def _params() -> GeneratorParams:
    return GeneratorParams(jitter=0.0, ring_radius=4.0, building_half=2.0, poses=8, levels=1)


def _scenario(name, centers, edges, obstructions, start_pose, query, seed, detour_bound, **kw) -> Scenario:
    p = _params()
    lsg, grid = ring_world(centers, edges, p)
    grid_doc = {
        "resolution": grid.resolution,
        "origin": list(grid.origin),
        "extent": list(grid.extent),
        "occupied": [],
        "boxes": [{"center": list(c), "half_extents": list(h)} for c, h in building_boxes(centers, p)],
    }
    t, level, pose = start_pose
    x, y, z = pose_ring(p.poses, centers[t], p.ring_radius, p.pose_z)[pose]
    return Scenario(
        lsg=save_lsg(lsg),
        grid=grid_doc,
        obstructions=obstructions,
        queries=[(0.0, query)],
        start=(x, y, z, 0.0),
        seed=seed,
        detour_bound=detour_bound,
        name=name,
        **kw,
    )


def _wall_x(x, y_lo, y_hi, t=0.0) -> Obstruction:
    """Full-height wall thin in x spanning [y_lo, y_hi]."""
    return Obstruction(
        (round(float(x), 6), round((y_lo + y_hi) / 2, 6), WORLD_TOP / 2),
        (WALL_HALF_THICKNESS, round((y_hi - y_lo) / 2, 6), WORLD_TOP / 2),
        float(t),
    )


def pose_ring_scenario(seed: int = 0) -> Scenario:
    """Two targets; a radial wall cuts the preferred (northern) arc of the start target's ring.

    The wall reaches from the building past the ring, so no short detour
    exists and the planner has to switch to the southern arc.
    """
    rng = np.random.default_rng(seed)
    wall = _wall_x(rng.uniform(1.0, 1.8), 1.9, rng.uniform(7.0, 8.0))
    return _scenario(
        "pose_ring", [(0, 0), (20, 0)], [(0, 1)], [wall], (0, 0, 4), Query(1), seed, detour_bound=4.0
    )


def small_obstacle_scenario(seed: int = 0) -> Scenario:
    """Two targets; a small box sits on the inter-target hop with free space around it."""
    rng = np.random.default_rng(seed)
    box = Obstruction(
        (round(10 + rng.uniform(-1, 1), 6), round(rng.uniform(-0.2, 0.2), 6), 1.0), (0.3, 0.3, 0.3), 0.0
    )
    return _scenario(
        "small_obstacle", [(0, 0), (20, 0)], [(0, 1)], [box], (0, 0, 0), Query(1), seed, detour_bound=6.0
    )


def walled_corridor_scenario(seed: int = 0) -> Scenario:
    """A and B joined directly and through C; a long wall cuts the direct gap between A and B."""
    rng = np.random.default_rng(seed)
    half = rng.uniform(6.5, 7.5)
    wall = _wall_x(10 + rng.uniform(-1, 1), -half, half)
    return _scenario(
        "walled_corridor",
        [(0, 0), (20, 0), (10, 17)],
        [(0, 1), (0, 2), (2, 1)],
        [wall],
        (0, 0, 0),
        Query(1),
        seed,
        detour_bound=8.0,
    )


def urban_grid_scenario(seed: int = 0) -> Scenario:
    """3x3 block layout; walls appear in the gaps 0-1 and 3-4 so two global replans are needed."""
    centers = [(20 * (i % 3), 20 * (i // 3)) for i in range(9)]
    walls = [_wall_x(10, -7, 7, 0.0), _wall_x(10, 13, 27, 10.0)]
    return _scenario(
        "urban_grid", centers, grid_neighbor_pairs(9), walls, (0, 0, 4), Query(8), seed, detour_bound=8.0
    )


def adjacent_scenario(seed: int = 0) -> Scenario:
    """Two targets, no obstructions, robot starts on the transition pose."""
    return _scenario("adjacent", [(0, 0), (20, 0)], [(0, 1)], [], (0, 0, 0), Query(1), seed, detour_bound=4.0)


FIXTURES = {
    "pose_ring": pose_ring_scenario,
    "small_obstacle": small_obstacle_scenario,
    "walled_corridor": walled_corridor_scenario,
    "urban_grid": urban_grid_scenario,
    "adjacent": adjacent_scenario,
}
