from __future__ import annotations

import json

import pytest

from mentalnav.cogmap import build_cognitive_map
from mentalnav.scene import scene_from_dict
from mentalnav.synth import load_fixture

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])


def scene_doc(objects, rows, resolution=0.1, origin=(0.05, 0.0, 0.05), scene_id="test_scene"):
    """Scene document from (id, semantic, (x0, x1, y0, y1, z0, z1)) tuples and grid rows."""
    return {
        "scene_id": scene_id,
        "objects": [
            {"id": oid, "semantic": sem, "box": {"x": [b[0], b[1]], "y": [b[2], b[3]], "z": [b[4], b[5]]}}
            for oid, sem, b in objects
        ],
        "grid": {
            "resolution": resolution,
            "origin": list(origin),
            "width": len(rows[0]),
            "height": len(rows),
            "rows": rows,
        },
        "floorplan": {"scale": 10.0, "offset": [0.0, 0.0], "image_size": [100, 100]},
    }


def make_scene(objects, rows, **kw):
    return scene_from_dict(json.loads(json.dumps(scene_doc(objects, rows, **kw))))


def open_rows(width, height):
    return ["." * width] * height


@pytest.fixture(scope="session")
def apt1():
    return load_fixture("synthetic_apartment_01")


@pytest.fixture(scope="session")
def apt1_map(apt1):
    return build_cognitive_map(apt1)
