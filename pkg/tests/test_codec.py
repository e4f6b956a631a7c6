from __future__ import annotations

import json
import math

import pytest

from mentalnav.codec import (
    PlanChain,
    PlanStep,
    decode_chain,
    decode_step,
    encode_relation,
    parse_model_output,
    serialize_output,
)
from mentalnav.cogmap import CognitiveMap, DirBin, Landmark, Region, RelationDescriptor, VerticalRel
from mentalnav.errors import AmbiguousSemantic, EmptyDecodedChain, UnknownLandmark
from mentalnav.scene import Box2D
from mentalnav.tasks import generate_tasks


def small_map():
    lms = (
        Landmark("table_1", "table", Box2D(1.0, 3.0, 2.0, 4.0)),
        Landmark("lamp_1", "lamp", Box2D(5.0, 5.5, 0.0, 0.5)),
        Landmark("lamp_2", "lamp", Box2D(8.0, 8.5, 0.0, 0.5)),
    )
    return CognitiveMap((Region("region_0", tuple(lm.id for lm in lms)),), lms, ())


def step(lm, sem, d, dist):
    return PlanStep(lm, sem, RelationDescriptor(d, VerticalRel.SAME, dist))


def test_decode_axis_and_diagonal():
    cmap = small_map()
    w = decode_step(cmap, step("table_1", "table", DirBin.N, 1.0))
    assert (w.x, w.z) == (2.0, 4.0)
    w = decode_step(cmap, step("table_1", "table", DirBin.NE, math.sqrt(2)))
    assert w.x == pytest.approx(3.0, abs=1e-15) and w.z == pytest.approx(4.0, abs=1e-15)


def test_resolution_order():
    cmap = small_map()
    assert decode_step(cmap, step(None, "  TABLE ", DirBin.E, 1.0)).x == 3.0
    with pytest.raises(AmbiguousSemantic):
        decode_step(cmap, step(None, "lamp", DirBin.E, 1.0))
    with pytest.raises(UnknownLandmark):
        decode_step(cmap, step("sofa_9", "sofa", DirBin.E, 1.0))
    # an exact id wins over an ambiguous semantic
    assert decode_step(cmap, step("lamp_2", "lamp", DirBin.N, 0.0)).x == 8.25


def test_decode_chain_skips_unresolvable():
    cmap = small_map()
    chain = PlanChain((step("x", "x", DirBin.N, 1), step("table_1", "table", DirBin.S, 1), step(None, "lamp", DirBin.N, 1)))
    wps, issues = decode_chain(cmap, chain)
    assert len(wps) == 1 and len(issues) == 2
    assert issues[0].path.startswith("chain.steps[0]")
    with pytest.raises(EmptyDecodedChain):
        decode_chain(cmap, PlanChain((step("x", "x", DirBin.N, 1),)))


def test_goal_replaces_last_waypoint():
    chain = PlanChain((step("table_1", "table", DirBin.N, 1.0),), (7.0, 7.0))
    wps, _ = decode_chain(small_map(), chain)
    assert (wps[-1].x, wps[-1].z) == (7.0, 7.0)
    raw, _ = decode_chain(small_map(), chain, use_goal=False)
    assert (raw[-1].x, raw[-1].z) == (2.0, 4.0)


def test_encode_is_inverse_of_decode_on_bin_centres():
    for d in DirBin:
        w = decode_step(small_map(), step("table_1", "table", d, 2.5))
        d2, dist = encode_relation((2.0, 3.0), (w.x, w.z))
        assert d2 is d and dist == pytest.approx(2.5, abs=1e-12)


@pytest.fixture(scope="module")
def gt_pair(apt1, apt1_map):
    task = generate_tasks(apt1, apt1_map, 1, seed=2)[0]
    return apt1_map, task.gt_chain, serialize_output(apt1_map, task.gt_chain)


def test_gt_round_trip_zero_issues(gt_pair):
    cmap, chain, text = gt_pair
    out = parse_model_output(text)
    assert out.issues == [] and out.map.to_dict() == cmap.to_dict() and out.chain.to_dict() == chain.to_dict()
    again = parse_model_output(serialize_output(out.map, out.chain))
    assert again.map.to_dict() == out.map.to_dict() and again.chain.to_dict() == out.chain.to_dict()


def test_fenced_block_in_prose(gt_pair):
    _, _, text = gt_pair
    bare = parse_model_output(text)
    wrapped = parse_model_output(f"Let me think.\n```json\n{text}\n```\nDone.")
    assert wrapped.to_dict()["issues"] == [] and wrapped.map == bare.map and wrapped.chain == bare.chain
    assert parse_model_output(f"Prose {text}", strict=True).chain is None


def test_missing_dist_withholds_chain_only(gt_pair):
    _, _, text = gt_pair
    doc = json.loads(text)
    del doc["chain"]["steps"][0]["dist"]
    out = parse_model_output(json.dumps(doc))
    assert out.chain is None and out.map is not None
    assert any(i.severity == "error" and i.path == "chain.steps[0].dist" for i in out.issues)


def test_aliases_and_label_normalization():
    text = json.dumps(
        {
            "cognitive_map": {"regions": [], "landmarks": [{"id": "a", "semantic": " Big  Sofa", "bbox": [0, 1, 0, 1]}], "objects": []},
            "reasoning_chain": {"steps": [{"sem": "big sofa", "dir": "N", "dist": 1.0}]},
        }
    )
    out = parse_model_output(text)
    assert out.map.landmarks[0].semantic == "big sofa"
    assert out.chain.steps[0].rel.h is VerticalRel.SAME  # defaulted, with a warning
    assert all(i.severity == "warning" for i in out.issues)


@pytest.mark.parametrize("text", ["", "no json here", "{", "[1,2]", "\x00\xff", "{" * 5000])
def test_garbage_never_raises(text):
    out = parse_model_output(text)
    assert out.map is None and out.chain is None and out.n_errors >= 1
    assert len(out.raw_excerpt) <= 256
