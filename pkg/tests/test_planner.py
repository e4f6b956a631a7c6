from __future__ import annotations

import math

import numpy as np
import pytest

from mentalnav.errors import BlockedEndpoint, NoPath, SnapFailure
from mentalnav.oracles import ucs_counts
from mentalnav.planner import (
    SQRT2,
    discretize,
    exploration_tour,
    geodesic_distance,
    path_is_valid,
    shortest_path,
    snap_to_navigable,
)
from mentalnav.scene import OccupancyGrid, WorldPoint


def grid_from(rows, res=1.0):
    return OccupancyGrid(res, WorldPoint(0.0, 0.0, 0.0), np.array([[ch == "." for ch in r] for r in rows]))


def test_same_cell_path():
    g = grid_from(["...", "..."])
    p = shortest_path(g, (0, 1), (0, 1))
    assert p.cells == ((0, 1),) and p.length == 0.0


def test_pure_diagonal():
    g = OccupancyGrid(0.1, WorldPoint(0, 0, 0), np.ones((10, 10), bool))
    p = shortest_path(g, (0, 0), (9, 9))
    assert p.length == 9 * SQRT2 * 0.1
    assert (p.axial, p.diagonal) == (0, 9)


def test_blocked_and_disconnected():
    g = grid_from([".#.", ".#.", ".#."])
    with pytest.raises(NoPath):
        shortest_path(g, (0, 0), (0, 2))
    with pytest.raises(BlockedEndpoint):
        shortest_path(g, (0, 0), (0, 1))


def test_no_corner_cutting():
    g = grid_from(["..", "#."])
    # (0,0) -> (1,1) would cut past the blocked (1,0)
    p = shortest_path(g, (0, 0), (1, 1))
    assert p.cells == ((0, 0), (0, 1), (1, 1))


def test_equal_cost_paths_are_deterministic():
    g = grid_from(["....", "....", "...."])
    a = shortest_path(g, (0, 0), (2, 3))
    b = shortest_path(g, (0, 0), (2, 3))
    assert a == b
    assert path_is_valid(g, a.cells)


def test_u_wall_geodesic_matches_oracle():
    rows = [
        "..........",
        "..######..",
        "..#....#..",
        "..#....#..",
        "..#....#..",
        "..........",
    ]
    g = grid_from(rows, res=0.5)
    a = g.cell_to_world((3, 4))
    b = g.cell_to_world((0, 4))
    geo = geodesic_distance(g, a, b)
    ax, dg = ucs_counts(g, (3, 4))[(0, 4)]
    assert geo == (ax + dg * SQRT2) * 0.5
    assert geo > math.dist((a.x, a.z), (b.x, b.z))


def test_geodesic_corridor_and_failures():
    g = OccupancyGrid(0.1, WorldPoint(0.05, 0, 0.05), np.ones((3, 80), bool))
    d = geodesic_distance(g, WorldPoint(0.55, 0, 0.15), WorldPoint(5.55, 0, 0.15))
    assert abs(d - 5.0) <= 0.1
    split = np.ones((3, 20), bool)
    split[:, 10] = False
    g2 = OccupancyGrid(0.1, WorldPoint(0, 0, 0), split)
    with pytest.raises(NoPath):
        geodesic_distance(g2, WorldPoint(0.0, 0, 0.1), WorldPoint(1.9, 0, 0.1))
    with pytest.raises(SnapFailure):
        geodesic_distance(g2, WorldPoint(-5.0, 0, 0.1), WorldPoint(1.9, 0, 0.1))


def test_snap_examples():
    g = grid_from(["....", "....", "...."], res=0.1)
    assert snap_to_navigable(g, WorldPoint(0.2, 0, 0.1), 0.0) == (1, 2)
    strip = np.ones((9, 9), bool)
    strip[:, 4] = False  # 0.1 m wide blocked column
    g = OccupancyGrid(0.1, WorldPoint(0, 0, 0), strip)
    assert snap_to_navigable(g, WorldPoint(0.4, 0, 0.4), 0.5) == (4, 3)  # tie 3 vs 5: row-major keeps col 3
    disk = np.ones((41, 41), bool)
    yy, xx = np.mgrid[:41, :41]
    disk[(yy - 20) ** 2 + (xx - 20) ** 2 <= 100] = False  # 1 m radius blocked disk
    g = OccupancyGrid(0.1, WorldPoint(0, 0, 0), disk)
    assert snap_to_navigable(g, WorldPoint(2.0, 0, 2.0), 0.5) is None


def test_discretize_examples():
    g = OccupancyGrid(0.1, WorldPoint(0, 0, 0), np.ones((1, 21), bool))
    one = shortest_path(g, (0, 3), (0, 3))
    assert len(discretize(g, one, 0.5)) == 1
    straight = shortest_path(g, (0, 0), (0, 20))
    xs = [round(w.x, 9) for w in discretize(g, straight, 0.5)]
    assert xs == [0.0, 0.5, 1.0, 1.5, 2.0]


def test_discretize_l_path_spacing():
    rows = ["#" * 12] + ["#" + "." * 3 + "#" * 8] * 8 + ["#" + "." * 10 + "#"] * 3 + ["#" * 12]
    g = grid_from(rows, res=0.1)
    path = shortest_path(g, (1, 1), (10, 10))
    pts = discretize(g, path, 0.25)
    assert (pts[0].x, pts[0].z) == g.cell_center(path.cells[0])
    assert (pts[-1].x, pts[-1].z) == g.cell_center(path.cells[-1])
    assert all(math.dist((a.x, a.z), (b.x, b.z)) <= 0.25 + 1e-9 for a, b in zip(pts, pts[1:]))


def test_exploration_tour_single_waypoint():
    g = grid_from(["....", "....", "...."])
    tour = exploration_tour(g, 1, seed=3)
    scans = tour.poses[-8:]
    assert len({(p.position.x, p.position.z) for p in scans}) == 1
    assert sorted(round(p.yaw) for p in scans) == [0, 45, 90, 135, 180, 225, 270, 315]


def test_exploration_tour_fixture(apt1):
    g = apt1.grid
    t1 = exploration_tour(g, 12, seed=5)
    assert t1 == exploration_tour(g, 12, seed=5)
    for a, b in zip(t1.poses, t1.poses[1:]):
        step = math.dist((a.position.x, a.position.z), (b.position.x, b.position.z))
        assert step <= g.resolution * SQRT2 + 1e-9
    lines = t1.to_jsonl().splitlines()
    assert len(lines) == len(t1.poses)


def test_tour_unreachable_raises():
    g = grid_from(["..#..", "..#..", "..#.."])
    with pytest.raises(NoPath):
        exploration_tour(g, 30, seed=0, max_resample=0)
