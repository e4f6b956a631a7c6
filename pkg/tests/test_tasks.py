from __future__ import annotations

import math

import pytest

from mentalnav.codec import decode_chain, parse_model_output, serialize_output
from mentalnav.cogmap import build_cognitive_map
from mentalnav.errors import ExhaustedSampling, OutOfRange
from mentalnav.evaluation import evaluate_instance, execute_plan, navigation_error
from mentalnav.oracles import ucs_counts
from mentalnav.planner import SQRT2, shortest_path
from mentalnav.tasks import (
    ChainConfig,
    Stratum,
    build_reasoning_chain,
    generate_tasks,
    sample_task,
    stratum_of,
    task_from_dict,
)

from conftest import make_scene, open_rows


@pytest.mark.parametrize(
    "length, expected",
    [(3.0, Stratum.SHORT), (6.0, Stratum.MEDIUM), (9.999, Stratum.MEDIUM), (10.0, Stratum.LONG), (48.0, Stratum.LONG)],
)
def test_stratum_bins(length, expected):
    assert stratum_of(length) is expected


@pytest.mark.parametrize("bad", [48.0001, -0.1])
def test_stratum_out_of_range(bad):
    with pytest.raises(OutOfRange):
        stratum_of(bad)


def test_two_entity_scene_is_deterministic():
    scene = make_scene(
        [("sofa", "sofa", (0.5, 1.5, 0, 0.8, 0.5, 1.0)), ("bed", "bed", (3.5, 4.5, 0, 0.6, 2.5, 3.5))],
        open_rows(50, 40),
    )
    cmap = build_cognitive_map(scene)
    a = sample_task(scene, cmap, seed=9)
    assert a == sample_task(scene, cmap, seed=9)
    assert {a.query.s_src, a.query.s_tgt} == {"sofa #sofa", "bed #bed"}


def test_disconnected_entities_exhaust():
    rows = ["." * 20 + "#" + "." * 19] * 20
    scene = make_scene(
        [("sofa", "sofa", (0.3, 0.9, 0, 0.8, 0.3, 0.9)), ("bed", "bed", (3.0, 3.6, 0, 0.6, 0.3, 0.9))], rows
    )
    with pytest.raises(ExhaustedSampling):
        sample_task(scene, build_cognitive_map(scene), seed=0)


def test_fixture_samples_match_oracle_lengths(apt1, apt1_map):
    tasks = generate_tasks(apt1, apt1_map, 200, seed=21)
    assert len({t.task_id for t in tasks}) == 200
    for t in tasks:
        cells = t.gt_path.cells
        ax, dg = ucs_counts(apt1.grid, cells[0])[cells[-1]]
        assert t.gt_path_length == (ax + dg * SQRT2) * apt1.grid.resolution
        assert t.stratum is stratum_of(t.gt_path_length)
        assert task_from_dict(t.to_dict()).to_dict() == {k: v for k, v in t.to_dict().items() if k != "gt_path"}


def test_chain_compactness(apt1, apt1_map):
    cfg = ChainConfig()
    for t in generate_tasks(apt1, apt1_map, 60, seed=4):
        steps = t.gt_chain.steps
        assert all(a.lm != b.lm for a, b in zip(steps, steps[1:]))
        wps, _ = decode_chain(apt1_map, t.gt_chain, use_goal=False)
        assert all(math.dist((a.x, a.z), (b.x, b.z)) >= cfg.min_step for a, b in zip(wps, wps[1:]))


def _long_route_scene():
    objects = [
        ("sofa", "sofa", (1.0, 2.0, 0, 0.8, 1.5, 2.0)),
        ("table", "table", (4.0, 4.6, 0, 0.7, 0.0, 0.6)),
        ("wardrobe", "wardrobe", (8.0, 8.6, 0, 2.0, 2.8, 3.4)),  # off the route
        ("bed", "bed", (12.0, 14.0, 0, 0.5, 1.5, 3.5)),
    ]
    return make_scene(objects, open_rows(150, 40))


def test_long_route_gets_one_synthetic_cue():
    scene = _long_route_scene()
    cmap = build_cognitive_map(scene)
    path = shortest_path(scene.grid, (10, 0), (10, 140))
    assert path.length == pytest.approx(14.0)
    chain = build_reasoning_chain(scene.grid, path, cmap, target="bed")
    assert [s.lm for s in chain.steps] == ["sofa", "table", "wardrobe", "bed"]
    # the wardrobe never comes within the corridor, so its step is the synthetic cue
    assert chain.steps[2].rel.dist > ChainConfig().corridor

    wps, issues = decode_chain(cmap, chain)
    assert issues == []
    result = execute_plan(scene.grid, path.cells[0], wps)
    end = scene.grid.cell_to_world(path.cells[-1])
    assert result.executable and navigation_error(result.final_position, end) < 1.0


def test_gt_outputs_score_perfectly(apt1, apt1_map):
    for t in generate_tasks(apt1, apt1_map, 20, seed=8):
        r = evaluate_instance(t, parse_model_output(serialize_output(apt1_map, t.gt_chain)), apt1, apt1_map)
        assert r.sr_t and r.sr_p and r.spl >= 0.85 and r.miou == 1.0 and r.f1 == 1.0
        assert r.ne_waypoint < 1.0
