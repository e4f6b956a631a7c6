"""World-coordinate data model and scene file ingestion.

Coordinates follow a right-handed frame: +X is global right, +Y is up and
+Z is global forward. Azimuths are measured clockwise from +Z, so 0 deg
points along +Z and 90 deg along +X. Everything planar lives on the
(x, z) ground plane.

Grid cells are addressed as ``(row, col)``; column grows with +X and row
grows with +Z, and ``origin`` is the centre of cell ``(0, 0)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np

from ._validation import (
    check_int,
    check_keys,
    check_list,
    check_number,
    check_positive,
    check_str,
    round_sig,
)
from .errors import GeometryError, GridError, SchemaError

Cell = tuple[int, int]


@dataclass(frozen=True)
class WorldPoint:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise GeometryError(f"non-finite coordinate {(self.x, self.y, self.z)}")

    def ground(self) -> tuple[float, float]:
        return (self.x, self.z)

    def ground_distance(self, other: WorldPoint) -> float:
        return math.hypot(self.x - other.x, self.z - other.z)


# A waypoint is a world point at the agent's (constant) height.
Waypoint = WorldPoint


@dataclass(frozen=True)
class Pose:
    position: WorldPoint
    yaw: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", float(self.yaw) % 360.0)

    def to_dict(self) -> dict[str, float]:
        p = self.position
        return {"x": p.x, "y": p.y, "z": p.z, "yaw": self.yaw}


@dataclass(frozen=True)
class Box2D:
    """Ground-plane footprint ``[x_min, x_max, z_min, z_max]``."""

    x_min: float
    x_max: float
    z_min: float
    z_max: float

    def __post_init__(self) -> None:
        if self.x_min > self.x_max or self.z_min > self.z_max:
            raise GeometryError(f"inverted box {self.as_list()}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.z_max - self.z_min)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.z_min + self.z_max) / 2.0)

    def as_list(self) -> list[float]:
        return [self.x_min, self.x_max, self.z_min, self.z_max]

    def intersection_area(self, other: Box2D) -> float:
        dx = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        dz = min(self.z_max, other.z_max) - max(self.z_min, other.z_min)
        if dx <= 0 or dz <= 0:
            return 0.0
        return dx * dz

    def iou(self, other: Box2D) -> float:
        inter = self.intersection_area(other)
        if inter <= 0:
            return 0.0
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0

    def distance_to(self, x: float, z: float) -> float:
        """Euclidean distance from a ground point to the box (0 inside)."""
        dx = max(self.x_min - x, 0.0, x - self.x_max)
        dz = max(self.z_min - z, 0.0, z - self.z_max)
        return math.hypot(dx, dz)

    def translated(self, dx: float, dz: float) -> Box2D:
        return Box2D(self.x_min + dx, self.x_max + dx, self.z_min + dz, self.z_max + dz)


@dataclass(frozen=True)
class Box3D:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def __post_init__(self) -> None:
        if self.x_min > self.x_max or self.y_min > self.y_max or self.z_min > self.z_max:
            raise GeometryError("inverted box")


def footprint(box: Box3D) -> Box2D:
    """Drop the vertical extent of a 3D box."""
    return Box2D(box.x_min, box.x_max, box.z_min, box.z_max)


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    semantic: str
    box: Box3D

    @property
    def footprint(self) -> Box2D:
        return footprint(self.box)


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Planar navigability map.

    ``navigable`` is a read-only boolean array of shape ``(height, width)``.
    """

    resolution: float
    origin: WorldPoint
    navigable: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not self.resolution > 0:
            raise GridError("resolution must be positive", "grid.resolution")
        arr = np.array(self.navigable, dtype=bool)
        if arr.ndim != 2 or arr.size == 0:
            raise GridError("grid must be a non-empty 2D array", "grid.rows")
        arr.setflags(write=False)
        object.__setattr__(self, "navigable", arr)

    @property
    def height(self) -> int:
        return self.navigable.shape[0]

    @property
    def width(self) -> int:
        return self.navigable.shape[1]

    @property
    def n_navigable(self) -> int:
        return int(self.navigable.sum())

    def extent(self) -> Box2D:
        """World-space footprint covered by the cells."""
        h = self.resolution / 2.0
        return Box2D(
            self.origin.x - h,
            self.origin.x + (self.width - 1) * self.resolution + h,
            self.origin.z - h,
            self.origin.z + (self.height - 1) * self.resolution + h,
        )

    def diameter(self) -> float:
        e = self.extent()
        return math.hypot(e.x_max - e.x_min, e.z_max - e.z_min)

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def is_navigable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and bool(self.navigable[cell])

    def world_to_cell(self, x: float, z: float) -> Cell:
        """Cell whose centre is nearest to ``(x, z)``; may be out of bounds."""
        col = math.floor((x - self.origin.x) / self.resolution + 0.5)
        row = math.floor((z - self.origin.z) / self.resolution + 0.5)
        return (row, col)

    def cell_center(self, cell: Cell) -> tuple[float, float]:
        r, c = cell
        return (self.origin.x + c * self.resolution, self.origin.z + r * self.resolution)

    def cell_to_world(self, cell: Cell, y: float | None = None) -> WorldPoint:
        x, z = self.cell_center(cell)
        return WorldPoint(x, self.origin.y if y is None else y, z)

    def navigable_cells(self) -> Iterator[Cell]:
        """Navigable cells in row-major order."""
        for r, c in zip(*np.nonzero(self.navigable)):
            yield (int(r), int(c))

    def rows(self) -> list[str]:
        return ["".join("." if v else "#" for v in row) for row in self.navigable]


@dataclass(frozen=True)
class FloorplanMapping:
    scale: float
    offset: tuple[float, float]
    image_size: tuple[int, int]

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise GeometryError("scale must be positive", "floorplan.scale")


def world_to_pixel(m: FloorplanMapping, p: WorldPoint) -> tuple[float, float]:
    """Project a world point onto the floorplan image; y is discarded.

    Out-of-image pixels are returned as is, not clamped.
    """
    return (m.scale * p.x + m.offset[0], m.scale * p.z + m.offset[1])


def pixel_to_world(m: FloorplanMapping, px: float, pz: float, y: float = 0.0) -> WorldPoint:
    return WorldPoint((px - m.offset[0]) / m.scale, y, (pz - m.offset[1]) / m.scale)


@dataclass(frozen=True, eq=False)
class SceneAnnotation:
    scene_id: str
    objects: tuple[ObjectInstance, ...]
    grid: OccupancyGrid
    floorplan: FloorplanMapping

    def object_by_id(self, object_id: str) -> ObjectInstance:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)


# -- parsing ---------------------------------------------------------------

_TOP_KEYS = ("scene_id", "objects", "grid", "floorplan")


def parse_scene(data: bytes | str) -> SceneAnnotation:
    """Parse and validate a scene document.

    Raises:
        SchemaError: missing, mistyped or unknown field (``path`` names it).
        GeometryError: inverted box, duplicate id, object outside the grid.
        GridError: ragged rows or no navigable cell.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"not UTF-8: {exc}", "") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "") from None
    return scene_from_dict(doc)


def scene_from_dict(doc: Any) -> SceneAnnotation:
    if isinstance(doc, dict) and ("floors" in doc or isinstance(doc.get("grid"), list)):
        raise SchemaError("multi-floor scenes are not supported", "grid")
    check_keys(doc, "", _TOP_KEYS)
    scene_id = check_str(doc["scene_id"], "scene_id")
    grid = _parse_grid(doc["grid"])
    floorplan = _parse_floorplan(doc["floorplan"])

    objects = []
    seen: set[str] = set()
    extent = grid.extent()
    for i, raw in enumerate(check_list(doc["objects"], "objects")):
        path = f"objects[{i}]"
        check_keys(raw, path, ("id", "semantic", "box"))
        oid = check_str(raw["id"], f"{path}.id")
        semantic = check_str(raw["semantic"], f"{path}.semantic")
        box_raw = check_keys(raw["box"], f"{path}.box", ("x", "y", "z"))
        bounds = {}
        for axis in ("x", "y", "z"):
            pair = check_list(box_raw[axis], f"{path}.box.{axis}", length=2)
            lo = check_number(pair[0], f"{path}.box.{axis}[0]")
            hi = check_number(pair[1], f"{path}.box.{axis}[1]")
            if lo > hi:
                raise GeometryError(f"inverted box on object {oid!r} ({axis}_min > {axis}_max)", f"{path}.box.{axis}")
            bounds[axis] = (lo, hi)
        if oid in seen:
            raise GeometryError(f"duplicate object id {oid!r}", f"{path}.id")
        seen.add(oid)
        box = Box3D(bounds["x"][0], bounds["x"][1], bounds["y"][0], bounds["y"][1], bounds["z"][0], bounds["z"][1])
        fp = footprint(box)
        if (
            fp.x_max < extent.x_min
            or fp.x_min > extent.x_max
            or fp.z_max < extent.z_min
            or fp.z_min > extent.z_max
        ):
            raise GeometryError(f"object {oid!r} lies outside the grid extent", f"{path}.box")
        objects.append(ObjectInstance(oid, semantic, box))
    return SceneAnnotation(scene_id, tuple(objects), grid, floorplan)


def _parse_grid(raw: Any) -> OccupancyGrid:
    check_keys(raw, "grid", ("resolution", "origin", "width", "height", "rows"))
    resolution = check_positive(raw["resolution"], "grid.resolution")
    origin_raw = check_list(raw["origin"], "grid.origin", length=3)
    origin = WorldPoint(*(check_number(v, f"grid.origin[{i}]") for i, v in enumerate(origin_raw)))
    width = check_int(raw["width"], "grid.width", minimum=1)
    height = check_int(raw["height"], "grid.height", minimum=1)
    rows = check_list(raw["rows"], "grid.rows", length=height)
    cells = np.zeros((height, width), dtype=bool)
    for r, row in enumerate(rows):
        path = f"grid.rows[{r}]"
        if not isinstance(row, str):
            raise SchemaError("expected a string", path)
        if len(row) != width:
            raise GridError(f"expected {width} cells, got {len(row)}", path)
        bad = set(row) - {".", "#"}
        if bad:
            raise SchemaError(f"unexpected cell characters {sorted(bad)}", path)
        cells[r] = [ch == "." for ch in row]
    if not cells.any():
        raise GridError("grid has no navigable cell", "grid.rows")
    return OccupancyGrid(resolution, origin, cells)


def _parse_floorplan(raw: Any) -> FloorplanMapping:
    check_keys(raw, "floorplan", ("scale", "offset", "image_size"))
    scale = check_positive(raw["scale"], "floorplan.scale")
    off = check_list(raw["offset"], "floorplan.offset", length=2)
    size = check_list(raw["image_size"], "floorplan.image_size", length=2)
    return FloorplanMapping(
        scale,
        (check_number(off[0], "floorplan.offset[0]"), check_number(off[1], "floorplan.offset[1]")),
        (check_int(size[0], "floorplan.image_size[0]", minimum=1), check_int(size[1], "floorplan.image_size[1]", minimum=1)),
    )


# -- serialization ---------------------------------------------------------


def scene_to_dict(scene: SceneAnnotation) -> dict[str, Any]:
    g = scene.grid
    fp = scene.floorplan
    return {
        "scene_id": scene.scene_id,
        "objects": [
            {
                "id": o.id,
                "semantic": o.semantic,
                "box": {
                    "x": [round_sig(o.box.x_min), round_sig(o.box.x_max)],
                    "y": [round_sig(o.box.y_min), round_sig(o.box.y_max)],
                    "z": [round_sig(o.box.z_min), round_sig(o.box.z_max)],
                },
            }
            for o in scene.objects
        ],
        "grid": {
            "resolution": round_sig(g.resolution),
            "origin": [round_sig(g.origin.x), round_sig(g.origin.y), round_sig(g.origin.z)],
            "width": g.width,
            "height": g.height,
            "rows": g.rows(),
        },
        "floorplan": {
            "scale": round_sig(fp.scale),
            "offset": [round_sig(fp.offset[0]), round_sig(fp.offset[1])],
            "image_size": [int(fp.image_size[0]), int(fp.image_size[1])],
        },
    }


def serialize_scene(scene: SceneAnnotation) -> str:
    """Canonical form: sorted keys, floats at 6 significant digits."""
    return json.dumps(scene_to_dict(scene), sort_keys=True, indent=1) + "\n"
