"""Shortest paths and trajectories on an occupancy grid.

The grid is 8-connected with octile step costs (1 for axial moves, sqrt(2)
for diagonal ones). A diagonal move is only allowed when both axial cells
it cuts past are navigable, so an agent never squeezes between two
blocked corners.

Path costs are tracked as integer ``(axial, diagonal)`` step counts and
converted to meters only at the end. Two distinct count pairs never share a
real length (sqrt(2) is irrational), so equal-cost paths found by different
searches report bit-identical lengths.
"""

from __future__ import annotations

import heapq
import json
import math
import weakref
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._validation import check_random_state
from .errors import BlockedEndpoint, NoPath, SnapFailure
from .scene import Cell, OccupancyGrid, Pose, WorldPoint

SQRT2 = math.sqrt(2.0)

# (d_row, d_col) in the fixed expansion order E, NE, N, NW, W, SW, S, SE.
# Column grows with +X (east) and row with +Z (north).
MOVES: tuple[tuple[int, int], ...] = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))

DEFAULT_AGENT_HEIGHT = 0.8


@dataclass(frozen=True)
class GridPath:
    cells: tuple[Cell, ...]
    axial: int
    diagonal: int
    resolution: float

    @property
    def length(self) -> float:
        return octile_length(self.axial, self.diagonal, self.resolution)

    def reversed(self) -> GridPath:
        return GridPath(tuple(reversed(self.cells)), self.axial, self.diagonal, self.resolution)


@dataclass(frozen=True)
class Trajectory:
    poses: tuple[Pose, ...]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(p.to_dict(), sort_keys=True) + "\n" for p in self.poses)


def octile_length(axial: int, diagonal: int, resolution: float) -> float:
    return (axial + diagonal * SQRT2) * resolution


# -- search tables ---------------------------------------------------------

_TABLES: "weakref.WeakKeyDictionary[OccupancyGrid, _Table]" = weakref.WeakKeyDictionary()


@dataclass
class _Table:
    nav: bytes  # padded, row-major, 1 = navigable
    wp: int  # padded width
    moves: tuple[tuple[int, int, int, int], ...] = field(default=())  # (offset, is_diag, side1, side2)


def _table(grid: OccupancyGrid) -> _Table:
    tab = _TABLES.get(grid)
    if tab is None:
        padded = np.zeros((grid.height + 2, grid.width + 2), dtype=np.uint8)
        padded[1:-1, 1:-1] = grid.navigable
        wp = grid.width + 2
        moves = []
        for dr, dc in MOVES:
            diag = int(dr != 0 and dc != 0)
            moves.append((dr * wp + dc, diag, dr * wp, dc))
        tab = _Table(padded.tobytes(), wp, tuple(moves))
        _TABLES[grid] = tab
    return tab


def _flat(tab: _Table, cell: Cell) -> int:
    return (cell[0] + 1) * tab.wp + cell[1] + 1


def _unflat(tab: _Table, idx: int) -> Cell:
    r, c = divmod(idx, tab.wp)
    return (r - 1, c - 1)


def neighbors(grid: OccupancyGrid, cell: Cell) -> Iterable[tuple[Cell, bool]]:
    """Navigable 8-neighbours of ``cell`` as ``(cell, is_diagonal)``, in expansion order."""
    r, c = cell
    for dr, dc in MOVES:
        nb = (r + dr, c + dc)
        if not grid.is_navigable(nb):
            continue
        diag = dr != 0 and dc != 0
        if diag and not (grid.is_navigable((r + dr, c)) and grid.is_navigable((r, c + dc))):
            continue
        yield nb, diag


# -- shortest paths --------------------------------------------------------


def shortest_path(grid: OccupancyGrid, a: Cell, b: Cell) -> GridPath:
    """A* with the octile heuristic between two navigable cells.

    Among equal-cost paths the result is deterministic: neighbours are
    expanded in the fixed E, NE, N, NW, W, SW, S, SE order and open-set ties
    resolve by insertion order.

    Raises:
        BlockedEndpoint: ``a`` or ``b`` is not navigable.
        NoPath: the cells lie in different connected components.
    """
    for name, cell in (("a", a), ("b", b)):
        if not grid.is_navigable(cell):
            raise BlockedEndpoint(f"cell {cell} is not navigable", name)
    if a == b:
        return GridPath((a,), 0, 0, grid.resolution)

    tab = _table(grid)
    nav, wp, moves = tab.nav, tab.wp, tab.moves
    src, dst = _flat(tab, a), _flat(tab, b)
    tr, tc = divmod(dst, wp)

    g_ax = {src: 0}
    g_dg = {src: 0}
    g = {src: 0.0}
    parent = {src: -1}
    closed = set()
    counter = 0
    dr0, dc0 = abs(a[0] - b[0]), abs(a[1] - b[1])
    heap = [(abs(dr0 - dc0) + min(dr0, dc0) * SQRT2, 0, src)]
    while heap:
        _, _, u = heapq.heappop(heap)
        if u in closed:
            continue
        if u == dst:
            break
        closed.add(u)
        ua, ud = g_ax[u], g_dg[u]
        for off, diag, s1, s2 in moves:
            v = u + off
            if not nav[v] or v in closed:
                continue
            if diag:
                if not (nav[u + s1] and nav[u + s2]):
                    continue
                va, vd = ua, ud + 1
            else:
                va, vd = ua + 1, ud
            gv = va + vd * SQRT2
            old = g.get(v)
            if old is None or gv < old:
                g[v] = gv
                g_ax[v] = va
                g_dg[v] = vd
                parent[v] = u
                vr, vc = divmod(v, wp)
                dr, dc = abs(vr - tr), abs(vc - tc)
                h = abs(dr - dc) + min(dr, dc) * SQRT2
                counter += 1
                heapq.heappush(heap, (gv + h, counter, v))
    if dst not in parent:
        raise NoPath(f"no path from {a} to {b}")
    cells = []
    cur = dst
    while cur != -1:
        cells.append(_unflat(tab, cur))
        cur = parent[cur]
    cells.reverse()
    return GridPath(tuple(cells), g_ax[dst], g_dg[dst], grid.resolution)


def snap_to_navigable(grid: OccupancyGrid, p: WorldPoint | tuple[float, float], radius: float) -> Cell | None:
    """Nearest navigable cell centre within ``radius`` meters, else ``None``.

    Distance ties resolve in row-major order.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    x, z = (p.x, p.z) if isinstance(p, WorldPoint) else p
    res = grid.resolution
    fc = (x - grid.origin.x) / res
    fr = (z - grid.origin.z) / res
    span = radius / res
    r_lo = max(0, math.ceil(fr - span))
    r_hi = min(grid.height - 1, math.floor(fr + span))
    c_lo = max(0, math.ceil(fc - span))
    c_hi = min(grid.width - 1, math.floor(fc + span))
    if r_lo > r_hi or c_lo > c_hi:
        return None
    window = grid.navigable[r_lo : r_hi + 1, c_lo : c_hi + 1]
    rr, cc = np.nonzero(window)
    if rr.size == 0:
        return None
    rows = rr + r_lo
    cols = cc + c_lo
    d = np.hypot(grid.origin.x + cols * res - x, grid.origin.z + rows * res - z)
    ok = d <= radius + 1e-9
    if not ok.any():
        return None
    d = np.where(ok, d, np.inf)
    best = int(np.argmin(d))  # nonzero() is row-major, argmin keeps the first
    return (int(rows[best]), int(cols[best]))


def geodesic_distance(
    grid: OccupancyGrid,
    a: WorldPoint,
    b: WorldPoint,
    snap_radius: float = 0.5,
) -> float:
    """Shortest traversable distance between two world points.

    Both points are snapped to navigable cells; the snap offsets are added
    to the grid path length.

    Raises:
        SnapFailure: a point has no navigable cell within ``snap_radius``.
        NoPath: the snapped cells are disconnected.
    """
    ca = snap_to_navigable(grid, a, snap_radius)
    if ca is None:
        raise SnapFailure(f"no navigable cell within {snap_radius} m", "a")
    cb = snap_to_navigable(grid, b, snap_radius)
    if cb is None:
        raise SnapFailure(f"no navigable cell within {snap_radius} m", "b")
    path = shortest_path(grid, ca, cb)
    off_a = math.dist(grid.cell_center(ca), (a.x, a.z))
    off_b = math.dist(grid.cell_center(cb), (b.x, b.z))
    return path.length + off_a + off_b


def path_points(grid: OccupancyGrid, path: GridPath) -> list[tuple[float, float]]:
    return [grid.cell_center(c) for c in path.cells]


def discretize(
    grid: OccupancyGrid,
    path: GridPath,
    step: float = 0.25,
    y: float = DEFAULT_AGENT_HEIGHT,
) -> list[WorldPoint]:
    """Resample a path every ``step`` meters of arc length.

    The first and last cell centres are always included, and consecutive
    waypoints are at most ``step`` apart.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    pts = path_points(grid, path)
    out = [WorldPoint(pts[0][0], y, pts[0][1])]
    if len(pts) == 1:
        return out
    seg_len = [math.dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    total = math.fsum(seg_len)
    tol = 1e-9 * max(1.0, total)
    k = 1
    seg = 0
    seg_start = 0.0
    while True:
        s = k * step
        if s >= total - tol:
            break
        while seg_start + seg_len[seg] < s:
            seg_start += seg_len[seg]
            seg += 1
        t = (s - seg_start) / seg_len[seg]
        (x0, z0), (x1, z1) = pts[seg], pts[seg + 1]
        out.append(WorldPoint(x0 + t * (x1 - x0), y, z0 + t * (z1 - z0)))
        k += 1
    out.append(WorldPoint(pts[-1][0], y, pts[-1][1]))
    return out


def heading(dx: float, dz: float) -> float:
    """Azimuth of a displacement in degrees (0 = +Z, 90 = +X)."""
    return math.degrees(math.atan2(dx, dz)) % 360.0


def exploration_tour(
    grid: OccupancyGrid,
    n_waypoints: int,
    seed: int,
    start: Cell | None = None,
    y: float = DEFAULT_AGENT_HEIGHT,
    max_resample: int = 10,
) -> Trajectory:
    """Random shortest-path tour with a 360 deg scan at each waypoint.

    Waypoints are drawn uniformly from the navigable cells and visited in
    the sampled order. At each one the agent turns in place through eight
    45 deg increments. While travelling, yaw faces the direction of motion.

    Raises:
        NoPath: a waypoint stayed unreachable after ``max_resample`` redraws.
    """
    if n_waypoints < 1:
        raise ValueError("n_waypoints must be >= 1")
    rng = check_random_state(seed)
    cells = list(grid.navigable_cells())
    cur = cells[0] if start is None else start
    if not grid.is_navigable(cur):
        raise BlockedEndpoint(f"start {cur} is not navigable", "start")

    yaw = 0.0
    poses = [Pose(grid.cell_to_world(cur, y), yaw)]
    for _ in range(n_waypoints):
        for attempt in range(max_resample + 1):
            target = cells[int(rng.integers(len(cells)))]
            try:
                path = shortest_path(grid, cur, target)
                break
            except NoPath:
                if attempt == max_resample:
                    raise
        for prev, nxt in zip(path.cells, path.cells[1:]):
            yaw = heading(nxt[1] - prev[1], nxt[0] - prev[0])
            poses.append(Pose(grid.cell_to_world(nxt, y), yaw))
        pos = grid.cell_to_world(target, y)
        for k in range(1, 9):
            poses.append(Pose(pos, yaw + 45.0 * k))
        cur = target
    return Trajectory(tuple(poses))


def path_is_valid(grid: OccupancyGrid, cells: Sequence[Cell]) -> bool:
    """Every cell navigable and consecutive cells legal 8-moves."""
    if not cells or not all(grid.is_navigable(c) for c in cells):
        return False
    for u, v in zip(cells, cells[1:]):
        if v not in {nb for nb, _ in neighbors(grid, u)}:
            return False
    return True
