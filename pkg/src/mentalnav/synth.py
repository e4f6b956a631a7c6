"""Seeded synthetic apartments used as offline fixture scenes.

A layout lists rooms, walls with door gaps, and the furniture each room
holds. Furniture is placed by rejection sampling with a clearance margin so
that the free space stays connected; items flagged ``on`` rest on top of
another piece and do not block the floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from ._validation import check_random_state
from .scene import Box3D, FloorplanMapping, ObjectInstance, OccupancyGrid, SceneAnnotation, WorldPoint, parse_scene


@dataclass(frozen=True)
class Item:
    semantic: str
    width: float  # along x before rotation
    depth: float  # along z before rotation
    height: float
    on: str | None = None  # semantic of the supporting item in the same room
    blocks: bool = True


@dataclass(frozen=True)
class Room:
    name: str
    x0: float
    z0: float
    x1: float
    z1: float
    items: tuple[Item, ...] = ()


@dataclass(frozen=True)
class Wall:
    """Axis-aligned wall; ``doors`` are open intervals along it."""

    axis: str  # "x": runs along x at fixed z; "z": runs along z at fixed x
    at: float
    lo: float
    hi: float
    doors: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class Layout:
    scene_id: str
    width: float
    depth: float
    rooms: tuple[Room, ...]
    walls: tuple[Wall, ...] = ()
    background: tuple[str, ...] = ("floor",)
    resolution: float = 0.1
    wall_thickness: float = 0.2
    clearance: float = 0.7
    pixels_per_meter: float = 20.0


@dataclass
class _Placed:
    id: str
    item: Item
    box: Box3D
    room: str = field(default="")


def _overlaps(a: Box3D, b: Box3D, margin: float) -> bool:
    return not (
        a.x_max + margin <= b.x_min
        or b.x_max + margin <= a.x_min
        or a.z_max + margin <= b.z_min
        or b.z_max + margin <= a.z_min
    )


def _door_centers(layout: Layout) -> list[tuple[float, float]]:
    out = []
    for w in layout.walls:
        for lo, hi in w.doors:
            mid = (lo + hi) / 2.0
            out.append((mid, w.at) if w.axis == "x" else (w.at, mid))
    return out


def _rasterize(layout: Layout, placed: list[_Placed]) -> np.ndarray:
    res = layout.resolution
    w = int(round(layout.width / res))
    h = int(round(layout.depth / res))
    xs = (np.arange(w) + 0.5) * res
    zs = (np.arange(h) + 0.5) * res
    nav = np.ones((h, w), dtype=bool)
    nav[0, :] = nav[-1, :] = nav[:, 0] = nav[:, -1] = False
    half = layout.wall_thickness / 2.0
    for wall in layout.walls:
        if wall.axis == "x":
            band_r = np.abs(zs - wall.at) <= half
            along = (xs >= wall.lo) & (xs <= wall.hi)
            for lo, hi in wall.doors:
                along &= ~((xs > lo) & (xs < hi))
            nav[np.ix_(band_r, along)] = False
        else:
            band_c = np.abs(xs - wall.at) <= half
            along = (zs >= wall.lo) & (zs <= wall.hi)
            for lo, hi in wall.doors:
                along &= ~((zs > lo) & (zs < hi))
            nav[np.ix_(along, band_c)] = False
    for p in placed:
        if not p.item.blocks or p.item.on is not None:
            continue
        b = p.box
        cols = (xs >= b.x_min) & (xs <= b.x_max)
        rows = (zs >= b.z_min) & (zs <= b.z_max)
        nav[np.ix_(rows, cols)] = False
    return nav


def _connected(nav: np.ndarray) -> bool:
    # without corner cutting, reachability is 4-connectivity
    _, n = ndimage.label(nav)
    return n == 1


def synthesize_scene(layout: Layout, seed: int, max_attempts: int = 200) -> SceneAnnotation:
    """Place the layout's furniture at seeded random positions.

    Raises:
        RuntimeError: no placement kept the free space connected.
    """
    rng = check_random_state(seed)
    doors = _door_centers(layout)
    margin = layout.wall_thickness / 2.0 + 0.15
    for _ in range(max_attempts):
        placed = _place_all(layout, rng, doors, margin)
        if placed is None:
            continue
        nav = _rasterize(layout, placed)
        if _connected(nav):
            return _assemble(layout, placed, nav)
    raise RuntimeError(f"could not synthesize {layout.scene_id!r} with a connected floor")


def _place_all(layout: Layout, rng: np.random.Generator, doors, margin) -> list[_Placed] | None:
    placed: list[_Placed] = []
    counts: dict[str, int] = {}
    for room in layout.rooms:
        for item in room.items:
            k = counts.get(item.semantic, 0) + 1
            counts[item.semantic] = k
            oid = f"{item.semantic.replace(' ', '_')}_{k}"
            box = _place_one(layout, room, item, placed, rng, doors, margin)
            if box is None:
                return None
            placed.append(_Placed(oid, item, box, room.name))
    return placed


def _place_one(layout, room, item, placed, rng, doors, margin) -> Box3D | None:
    if item.on is not None:
        support = [p for p in placed if p.room == room.name and p.item.semantic == item.on]
        if not support:
            raise ValueError(f"{item.semantic!r} rests on missing {item.on!r}")
        base = support[-1].box
        w = min(item.width, base.x_max - base.x_min)
        d = min(item.depth, base.z_max - base.z_min)
        x = rng.uniform(base.x_min, base.x_max - w)
        z = rng.uniform(base.z_min, base.z_max - d)
        return Box3D(x, x + w, base.y_max, base.y_max + item.height, z, z + d)

    for _ in range(400):
        w, d = (item.width, item.depth) if rng.random() < 0.5 else (item.depth, item.width)
        x_lo, x_hi = room.x0 + margin, room.x1 - margin - w
        z_lo, z_hi = room.z0 + margin, room.z1 - margin - d
        if x_lo > x_hi or z_lo > z_hi:
            continue
        x = rng.uniform(x_lo, x_hi)
        z = rng.uniform(z_lo, z_hi)
        box = Box3D(x, x + w, 0.0, item.height, z, z + d)
        if any(_overlaps(box, p.box, layout.clearance) for p in placed if p.item.on is None):
            continue
        if any(_box_point_dist(box, c) < 1.0 for c in doors):
            continue
        return box
    return None


def _box_point_dist(b: Box3D, p: tuple[float, float]) -> float:
    dx = max(b.x_min - p[0], 0.0, p[0] - b.x_max)
    dz = max(b.z_min - p[1], 0.0, p[1] - b.z_max)
    return math.hypot(dx, dz)


def _assemble(layout: Layout, placed: list[_Placed], nav: np.ndarray) -> SceneAnnotation:
    res = layout.resolution
    objects = [
        ObjectInstance(name, name, Box3D(0.0, layout.width, -0.02, 0.0, 0.0, layout.depth))
        for name in layout.background
    ]
    objects += [ObjectInstance(p.id, p.item.semantic, _rounded(p.box)) for p in placed]
    grid = OccupancyGrid(res, WorldPoint(res / 2.0, 0.0, res / 2.0), nav)
    ppm = layout.pixels_per_meter
    floorplan = FloorplanMapping(ppm, (0.0, 0.0), (int(round(layout.width * ppm)), int(round(layout.depth * ppm))))
    return SceneAnnotation(layout.scene_id, tuple(objects), grid, floorplan)


def _rounded(b: Box3D) -> Box3D:
    # Keep boxes exactly representable in the canonical 6-significant-digit form.
    r = lambda v: round(v, 3)  # noqa: E731
    return Box3D(r(b.x_min), r(b.x_max), r(b.y_min), r(b.y_max), r(b.z_min), r(b.z_max))


# -- bundled layouts -------------------------------------------------------

SOFA = Item("sofa", 2.2, 0.9, 0.8)
COFFEE_TABLE = Item("coffee table", 1.1, 0.6, 0.45)
TV_STAND = Item("tv stand", 1.5, 0.45, 0.5)
ARMCHAIR = Item("armchair", 0.85, 0.85, 0.9)
BED = Item("bed", 2.0, 1.6, 0.55)
WARDROBE = Item("wardrobe", 1.3, 0.6, 2.0)
DESK = Item("desk", 1.2, 0.6, 0.75)
LAMP = Item("lamp", 0.35, 0.35, 1.6)
PLANT = Item("plant", 0.4, 0.4, 1.0)
CHAIR = Item("chair", 0.45, 0.45, 0.9)
BOOK = Item("book", 0.25, 0.18, 0.04, on="coffee table", blocks=False)
DINING_TABLE = Item("dining table", 1.6, 0.9, 0.75)
FRIDGE = Item("refrigerator", 0.75, 0.7, 1.8)
COUNTER = Item("kitchen counter", 2.4, 0.6, 0.9)
STOVE = Item("stove", 0.6, 0.6, 0.9)
SHELF = Item("bookshelf", 1.0, 0.35, 1.8)
NIGHTSTAND = Item("nightstand", 0.5, 0.45, 0.55)
TOILET = Item("toilet", 0.4, 0.65, 0.8)
SINK = Item("sink", 0.6, 0.5, 0.85)
BATHTUB = Item("bathtub", 1.7, 0.75, 0.6)
CABINET = Item("cabinet", 0.9, 0.45, 1.0)
MUG = Item("mug", 0.1, 0.1, 0.1, on="dining table", blocks=False)
LAPTOP = Item("laptop", 0.35, 0.25, 0.03, on="desk", blocks=False)


APARTMENT_01 = Layout(
    scene_id="synthetic_apartment_01",
    width=8.0,
    depth=6.0,
    rooms=(
        Room("living", 0.0, 0.0, 4.5, 6.0, (SOFA, TV_STAND, ARMCHAIR, COFFEE_TABLE, BOOK, LAMP, PLANT)),
        Room("bedroom", 4.5, 0.0, 8.0, 6.0, (BED, WARDROBE, DESK, CHAIR)),
    ),
    walls=(Wall("z", 4.5, 0.0, 6.0, doors=((2.5, 3.5),)),),
)

APARTMENT_02 = Layout(
    scene_id="synthetic_apartment_02",
    width=12.0,
    depth=8.0,
    rooms=(
        Room("living", 0.0, 0.0, 6.0, 8.0, (SOFA, TV_STAND, COFFEE_TABLE, BOOK, ARMCHAIR, SHELF, PLANT)),
        Room("bedroom", 6.0, 0.0, 12.0, 4.5, (BED, WARDROBE, NIGHTSTAND, DESK, LAPTOP)),
        Room("kitchen", 6.0, 4.5, 12.0, 8.0, (DINING_TABLE, MUG, COUNTER, FRIDGE, CHAIR)),
    ),
    walls=(
        Wall("z", 6.0, 0.0, 8.0, doors=((1.6, 2.6), (5.8, 6.8))),
        Wall("x", 4.5, 6.0, 12.0, doors=((9.6, 10.6),)),
    ),
)

APARTMENT_03 = Layout(
    scene_id="synthetic_apartment_03",
    width=16.0,
    depth=10.0,
    rooms=(
        Room("living", 0.0, 0.0, 8.0, 4.2, (SOFA, TV_STAND, COFFEE_TABLE, BOOK, ARMCHAIR, PLANT)),
        Room("kitchen", 8.0, 0.0, 16.0, 4.2, (DINING_TABLE, MUG, COUNTER, FRIDGE, STOVE, CHAIR)),
        Room("hall", 0.0, 4.2, 16.0, 5.8, ()),
        Room("bedroom", 0.0, 5.8, 6.0, 10.0, (BED, WARDROBE, NIGHTSTAND, LAMP)),
        Room("study", 6.0, 5.8, 11.0, 10.0, (DESK, LAPTOP, SHELF, CABINET)),
        Room("bathroom", 11.0, 5.8, 16.0, 10.0, (BATHTUB, TOILET, SINK)),
    ),
    walls=(
        Wall("x", 4.2, 0.0, 16.0, doors=((3.0, 4.0), (12.0, 13.0))),
        Wall("x", 5.8, 0.0, 16.0, doors=((2.0, 3.0), (8.0, 9.0), (13.5, 14.5))),
        Wall("z", 8.0, 0.0, 4.2),
        Wall("z", 6.0, 5.8, 10.0),
        Wall("z", 11.0, 5.8, 10.0),
    ),
    background=("floor", "rug"),
)

FIXTURE_LAYOUTS = {lay.scene_id: lay for lay in (APARTMENT_01, APARTMENT_02, APARTMENT_03)}

# seeds of the bundled fixture files in ``mentalnav/data``
FIXTURE_SEEDS = {"synthetic_apartment_01": 7, "synthetic_apartment_02": 0, "synthetic_apartment_03": 2}


def fixture_scene(scene_id: str) -> SceneAnnotation:
    """Re-synthesize a bundled fixture from its layout and seed."""
    if scene_id not in FIXTURE_LAYOUTS:
        raise KeyError(f"unknown fixture {scene_id!r}; known: {sorted(FIXTURE_LAYOUTS)}")
    return synthesize_scene(FIXTURE_LAYOUTS[scene_id], FIXTURE_SEEDS[scene_id])


def fixture_path(scene_id: str) -> Path:
    """Path of a bundled fixture scene file."""
    if scene_id not in FIXTURE_LAYOUTS:
        raise KeyError(f"unknown fixture {scene_id!r}; known: {sorted(FIXTURE_LAYOUTS)}")
    return Path(__file__).with_name("data") / f"{scene_id}.json"


def load_fixture(scene_id: str) -> SceneAnnotation:
    return parse_scene(fixture_path(scene_id).read_bytes())
