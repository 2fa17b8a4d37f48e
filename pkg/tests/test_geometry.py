import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import sampled_collision_free, voxel_reachable
from spade.errors import GoalOccupied, OutOfBounds, StartOccupied
from spade.geometry import (
    GeometricPath,
    Obstruction,
    VoxelGrid,
    alt_local_geometric_path,
    eval_geometric_path,
    eval_segment_traversability,
    first_blocked_hop,
    is_collision_free,
    update_local_map,
)
from spade.planner import Hop, LocalPlan

RES = 0.2
R = 0.3


def random_grid(rng, extent=(12, 12, 6), density=0.003):
    g = VoxelGrid(RES, (0, 0, 0), extent)
    g.occupancy[:] = rng.random(g.extent) < density
    return g


def random_query(seed, density=0.003):
    rng = np.random.default_rng(seed)
    g = random_grid(rng, density=density)
    a = rng.uniform(0, 2.4, 3) * [1, 1, 0.5]
    b = rng.uniform(0, 2.4, 3) * [1, 1, 0.5]
    return g, a, b


def oracle_free(g, a, b, radius=R, step=RES / 10):
    return sampled_collision_free(g.occupied_indices(), g.origin, g.resolution, a, b, radius, step)


def wall_grid(gap=False):
    """10 x 20 x 4 m window with a full-height wall at x in [4.8, 5.2).

    The gap spans y in [10, 11.4).  Detours use an 8 m box so they cannot
    slip around the wall ends through free out-of-window space.
    """
    g = VoxelGrid(RES, (0, 0, 0), (50, 100, 20))
    g.occupancy[24:26, :, :] = True
    if gap:
        g.occupancy[24:26, 50:57, :] = False
    return g


def plan_of(points):
    return LocalPlan(tuple(Hop((i,), tuple(map(float, p))) for i, p in enumerate(points)))


def test_empty_grid_is_free():
    g = VoxelGrid(RES, (0, 0, 0), (10, 10, 10))
    assert is_collision_free(g, (0.1, 0.1, 0.1), (1.9, 1.9, 1.9), R)


def test_single_voxel_on_segment_blocks_even_without_radius():
    g = VoxelGrid(RES, (0, 0, 0), (10, 10, 10))
    g.occupancy[5, 5, 5] = True
    assert not is_collision_free(g, (0.1, 1.1, 1.1), (1.9, 1.1, 1.1), 0.0)
    # a parallel segment well clear of the voxel
    assert is_collision_free(g, (0.1, 0.1, 0.1), (1.9, 0.1, 0.1), 0.0)


def test_out_of_bounds_is_free():
    g = VoxelGrid(RES, (0, 0, 0), (5, 5, 5))
    g.occupancy[:] = True
    assert is_collision_free(g, (5.0, 5.0, 5.0), (8.0, 6.0, 5.0), R)


@pytest.mark.parametrize("seed", range(100))
def test_matches_fine_sampling_oracle(seed):
    g, a, b = random_query(seed, density=0.01)
    assert is_collision_free(g, a, b, R) == oracle_free(g, a, b)


def test_sampling_oracle_step_matters_near_contact():
    # the swept distance to the nearest voxel is 0.29996 m: just inside the radius.
    # a res/10 sampling step misses the contact, a finer step finds it
    g, a, b = random_query(3448)
    assert not is_collision_free(g, a, b, R)
    assert oracle_free(g, a, b, step=RES / 10)
    assert not oracle_free(g, a, b, step=RES / 100)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_symmetry(seed):
    g, a, b = random_query(seed, density=0.01)
    assert is_collision_free(g, a, b, R) == is_collision_free(g, b, a, R)


def test_wall_on_second_hop():
    g = wall_grid()
    plan = plan_of([(1, 5, 1), (4, 5, 1), (6, 5, 1), (6, 8, 1), (8, 8, 1)])
    res = eval_segment_traversability(g, plan, R)
    assert [ok for _, ok in res] == [True, False, True, True]
    assert first_blocked_hop(res) == ((1,), (2,))


@pytest.mark.parametrize("seed", range(30))
def test_per_hop_agrees_with_direct_calls(seed):
    rng = np.random.default_rng(seed)
    g = VoxelGrid(RES, (0, 0, 0), (50, 50, 20))
    for _ in range(3):
        x = rng.integers(5, 45)
        y0, y1 = sorted(rng.integers(0, 50, 2))
        g.occupancy[x : x + 2, y0 : y1 + 1, :] = True
    pts = rng.uniform(0.5, 9.5, size=(5, 3)) * [1, 1, 0.35]
    res = eval_segment_traversability(g, plan_of(pts), R)
    expect = [is_collision_free(g, p, q, R) for p, q in zip(pts, pts[1:])]
    assert [ok for _, ok in res] == expect
    first = next((i for i, ok in enumerate(expect) if not ok), None)
    assert first_blocked_hop(res) == (None if first is None else ((first,), (first + 1,)))


def test_detour_on_free_grid_is_straight():
    g = VoxelGrid(RES, (0, 0, 0), (20, 20, 10))
    p = alt_local_geometric_path(g, (0.5, 0.5, 1.0), (3.5, 3.0, 1.0), R)
    assert len(p) == 2


def test_detour_through_gap():
    g = wall_grid(gap=True)
    a, b = np.array([2.0, 8.0, 1.0]), np.array([8.0, 8.0, 1.0])
    p = alt_local_geometric_path(g, a, b, R, bound=8.0)
    assert p is not None
    assert np.allclose(p.waypoints[0], a) and np.allclose(p.waypoints[-1], b)
    assert p.length >= np.linalg.norm(b - a)
    # crosses the wall plane only inside the gap
    for u, v in zip(p.waypoints, p.waypoints[1:]):
        assert is_collision_free(g, u, v, R)
        if (u[0] - 5.0) * (v[0] - 5.0) < 0:
            y = u[1] + (v[1] - u[1]) * (5.0 - u[0]) / (v[0] - u[0])
            assert 10.0 <= y <= 11.4
    assert voxel_reachable(~g.occupancy, g.voxel_of(a), g.voxel_of(b))


def test_detour_full_wall_is_none():
    g = wall_grid()
    assert not voxel_reachable(~g.occupancy, (10, 40, 5), (40, 40, 5))
    assert alt_local_geometric_path(g, (2.0, 8.0, 1.0), (8.0, 8.0, 1.0), R, bound=8.0) is None


def test_detour_endpoint_inside_obstacle():
    g = VoxelGrid(RES, (0, 0, 0), (30, 30, 10))
    g.occupancy[0:10, 0:10, :] = True
    g.occupancy[20:30, 20:30, :] = True
    with pytest.raises(StartOccupied):
        alt_local_geometric_path(g, (1.0, 1.0, 1.0), (3.0, 5.0, 1.0), R)
    with pytest.raises(GoalOccupied):
        alt_local_geometric_path(g, (3.0, 5.0, 1.0), (5.0, 5.0, 1.0), R)


@pytest.mark.parametrize("seed", range(10))
def test_detour_results_revalidate(seed):
    rng = np.random.default_rng(seed)
    g = random_grid(rng, extent=(40, 40, 10), density=0.02)
    a = rng.uniform(0.5, 7.5, 3) * [1, 1, 0.2]
    b = rng.uniform(0.5, 7.5, 3) * [1, 1, 0.2]
    try:
        p = alt_local_geometric_path(g, a, b, R, bound=10.0)
    except (StartOccupied, GoalOccupied):
        return
    if p is not None:
        assert all(is_collision_free(g, u, v, R) for u, v in zip(p.waypoints, p.waypoints[1:]))


def test_collinear_hops_collapse():
    g = VoxelGrid(RES, (0, 0, 0), (30, 10, 10))
    p = eval_geometric_path(plan_of([(0.5, 1, 1), (2, 1, 1), (3.5, 1, 1), (5, 1, 1)]), g, R)
    assert len(p) == 2
    assert p.length == pytest.approx(4.5)


def test_single_hop_plan():
    g = VoxelGrid(RES, (0, 0, 0), (30, 10, 10))
    p = eval_geometric_path(plan_of([(0.5, 1, 1), (2, 1, 1)]), g, R)
    assert len(p) == 2 and p.version == g.version


def test_detour_is_spliced():
    g = wall_grid(gap=True)
    hops = [(1, 8, 1), (2, 8, 1), (8, 8, 1), (9, 8, 1)]
    detour = alt_local_geometric_path(g, hops[1], hops[2], R, bound=8.0)
    p = eval_geometric_path(plan_of(hops), g, R, detours={1: detour}, shortcut_path=False)
    expect = [np.array(hops[0], float)] + detour.waypoints + [np.array(hops[3], float)]
    assert len(p) == len(expect)
    assert all(np.allclose(u, v) for u, v in zip(p.waypoints, expect))
    assert all(is_collision_free(g, u, v, R) for u, v in zip(p.waypoints, p.waypoints[1:]))


def test_update_single_voxel():
    g = VoxelGrid(RES, (0, 0, 0), (20, 20, 20))
    update_local_map(g, Obstruction((1.1, 1.1, 1.1), (0.05, 0.05, 0.05)))
    assert g.occupied_count == 1 and g.version == 1


def test_update_cube_and_idempotence():
    g = VoxelGrid(RES, (0, 0, 0), (20, 20, 20))
    ob = Obstruction((2.0, 2.0, 2.0), (1.0, 1.0, 1.0))
    update_local_map(g, ob)
    assert g.occupied_count == 1000
    before = g.occupancy.copy()
    update_local_map(g, ob)
    assert np.array_equal(before, g.occupancy)
    assert g.version == 2


def test_update_outside_window():
    g = VoxelGrid(RES, (0, 0, 0), (10, 10, 10))
    with pytest.raises(OutOfBounds):
        update_local_map(g, Obstruction((10.0, 10.0, 10.0), (1.0, 1.0, 1.0)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_adding_obstacles_never_frees_a_segment(seed):
    rng = np.random.default_rng(seed)
    g = random_grid(rng, density=0.005)
    segs = [(rng.uniform(0, 2.4, 3), rng.uniform(0, 2.4, 3)) for _ in range(5)]
    before = [is_collision_free(g, a, b, R) for a, b in segs]
    c = rng.uniform(0, 2.4, 3) * [1, 1, 0.5]
    update_local_map(g, Obstruction(tuple(c), tuple(rng.uniform(0.05, 0.4, 3))))
    after = [is_collision_free(g, a, b, R) for a, b in segs]
    assert all(x or not y for x, y in zip(before, after))


def test_grid_dict_round_trip():
    rng = np.random.default_rng(4)
    g = random_grid(rng, density=0.05)
    g.version = 7
    h = VoxelGrid.from_dict(g.to_dict())
    assert np.array_equal(g.occupancy, h.occupancy)
    assert (h.resolution, h.origin, h.extent) == (g.resolution, g.origin, g.extent)
    # the version counter belongs to the live map, a loaded grid starts fresh
    assert h.version == 0


def test_geometric_path_length():
    assert GeometricPath([(0, 0, 0), (3, 4, 0), (3, 4, 2)]).length == pytest.approx(7.0)
    assert math.isclose(GeometricPath([(0, 0, 0)]).length, 0.0)
