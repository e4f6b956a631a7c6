from __future__ import annotations

import json

import pytest

from mentalnav.errors import GeometryError, GridError, SchemaError
from mentalnav.scene import (
    Box2D,
    Box3D,
    FloorplanMapping,
    WorldPoint,
    footprint,
    parse_scene,
    pixel_to_world,
    serialize_scene,
    world_to_pixel,
)
from mentalnav.synth import fixture_path

from conftest import open_rows, scene_doc


def _minimal():
    return scene_doc([("sofa_1", "sofa", (0.1, 0.3, 0.0, 0.5, 0.1, 0.3))], open_rows(4, 4))


def test_minimal_scene_parses():
    scene = parse_scene(json.dumps(_minimal()).encode())
    assert len(scene.objects) == 1
    assert scene.grid.n_navigable == 16
    assert scene.objects[0].footprint == Box2D(0.1, 0.3, 0.1, 0.3)


def test_inverted_box_names_object():
    doc = _minimal()
    doc["objects"][0]["box"]["x"] = [0.3, 0.1]
    with pytest.raises(GeometryError) as ei:
        parse_scene(json.dumps(doc))
    assert "sofa_1" in str(ei.value)
    assert ei.value.path == "objects[0].box.x"


def test_missing_and_unknown_fields_carry_paths():
    doc = _minimal()
    del doc["grid"]["resolution"]
    with pytest.raises(SchemaError) as ei:
        parse_scene(json.dumps(doc))
    assert ei.value.path == "grid.resolution"

    doc = _minimal()
    doc["objects"][0]["color"] = "red"
    with pytest.raises(SchemaError) as ei:
        parse_scene(json.dumps(doc))
    assert ei.value.path == "objects[0].color"


def test_duplicate_id_and_out_of_extent():
    doc = _minimal()
    doc["objects"].append(dict(doc["objects"][0]))
    with pytest.raises(GeometryError):
        parse_scene(json.dumps(doc))
    doc = _minimal()
    doc["objects"][0]["box"]["x"] = [5.0, 6.0]
    with pytest.raises(GeometryError):
        parse_scene(json.dumps(doc))


def test_grid_errors():
    doc = scene_doc([], ["####", "####"])
    with pytest.raises(GridError):
        parse_scene(json.dumps(doc))
    doc = scene_doc([], ["....", "..."])
    with pytest.raises(GridError):
        parse_scene(json.dumps(doc))


def test_multi_floor_rejected():
    doc = _minimal()
    doc["floors"] = [1, 2]
    with pytest.raises(SchemaError):
        parse_scene(json.dumps(doc))


@pytest.mark.parametrize("raw", [b"\xff\xfe", b"not json", b"[]", b"{}"])
def test_garbage_is_schema_error(raw):
    with pytest.raises(SchemaError):
        parse_scene(raw)


def test_fixture_apartment_01_round_trip():
    raw = fixture_path("synthetic_apartment_01").read_text()
    scene = parse_scene(raw)
    assert len(scene.objects) == 12
    assert (scene.grid.width, scene.grid.height) == (80, 60)
    assert serialize_scene(scene) == raw
    assert serialize_scene(parse_scene(serialize_scene(scene))) == raw


def test_world_to_pixel_examples():
    m = FloorplanMapping(10.0, (0.0, 0.0), (100, 100))
    assert world_to_pixel(m, WorldPoint(1.5, 0.0, 2.0)) == (15.0, 20.0)
    assert world_to_pixel(FloorplanMapping(10.0, (100.0, 100.0), (10, 10)), WorldPoint(0, 0, 0)) == (100.0, 100.0)
    p = WorldPoint(1.234, 0.0, -3.21)
    q = pixel_to_world(m, *world_to_pixel(m, p))
    assert abs(q.x - p.x) <= 0.05 and abs(q.z - p.z) <= 0.05


def test_footprint_examples():
    assert footprint(Box3D(0, 1, 0, 1, 0, 1)) == Box2D(0, 1, 0, 1)
    assert footprint(Box3D(0, 1, 0, 1, 0, 1)).area == 1.0
    assert footprint(Box3D(2, 2, 0, 1, 0, 1)).area == 0.0
    assert footprint(Box3D(1.0, 3.2, 0.0, 0.9, 2.0, 3.1)).area == pytest.approx(2.42, abs=1e-12)


def test_cell_world_round_trip(apt1):
    g = apt1.grid
    for cell in list(g.navigable_cells())[::97]:
        x, z = g.cell_center(cell)
        assert g.world_to_cell(x + 0.049, z - 0.049) == cell


def test_scene_types_are_immutable(apt1):
    with pytest.raises(ValueError):
        apt1.grid.navigable[0, 0] = True
    with pytest.raises(AttributeError):
        apt1.objects[0].semantic = "x"
