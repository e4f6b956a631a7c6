from __future__ import annotations

import json
import math

import pytest

from mentalnav.cli import main
from mentalnav.cogrs import Token, TokenLogProbRecord
from mentalnav.config import RunConfig
from mentalnav.errors import ConfigError
from mentalnav.synth import fixture_path

APT = str(fixture_path("synthetic_apartment_01"))


def test_config_defaults_and_round_trip(tmp_path):
    cfg = RunConfig()
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"max_landmarks": 5, "band": [1.5, 4]}))
    loaded = RunConfig.load(p)
    assert loaded.max_landmarks == 5 and loaded.band == (1.5, 4)


@pytest.mark.parametrize(
    "doc",
    [{"max_landmark": 3}, {"growth": 1.0}, {"band": [3, 2]}, {"iou_thresh": 0}, {"n_regions": "many"}, {"band_percentiles": [90, 40]}],
)
def test_config_rejects(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_build_map_exit_codes(tmp_path, capsys):
    out = tmp_path / "map.json"
    assert main(["build-map", APT, "--seed", "0", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["landmarks"]

    bad = tmp_path / "bad.json"
    doc = json.loads(open(APT).read())
    doc["objects"][0]["bbox"] = "oops"
    bad.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["build-map", str(bad), "--seed", "0"]) == 1
    err = capsys.readouterr().err
    assert "objects[0]" in err and err.startswith("mentalnav: ")

    assert main(["build-map", str(tmp_path / "missing.json"), "--seed", "0"]) == 2
    assert main(["build-map", APT]) == 1  # seed required
    assert main(["build-map", APT, "--seed", "0", "--param", "bogus=1"]) == 1


def test_param_override(tmp_path):
    out = tmp_path / "m.json"
    assert main(["build-map", APT, "--seed", "0", "--param", "max_landmarks=3", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["landmarks"]) == 3


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    assert main(["gen-tasks", APT, "--seed", "3", "-n", "20", "--out", str(d)]) == 0
    return d


def test_gen_tasks_manifest(run_dir):
    man = json.loads((run_dir / "manifest.json").read_text())
    tasks = [json.loads(p.read_text()) for p in sorted((run_dir / "tasks").glob("*.json"))]
    assert man["n"] == len(tasks) == 20 == len(man["tasks"])
    recount = {"Short": 0, "Medium": 0, "Long": 0}
    for t in tasks:
        recount[t["stratum"]] += 1
    assert man["strata"] == recount
    assert len((run_dir / "gt_outputs.jsonl").read_text().splitlines()) == 20


def test_eval_gt_outputs(run_dir, tmp_path):
    rep = tmp_path / "r.json"
    assert main(["eval", "--tasks", str(run_dir), "--outputs", str(run_dir / "gt_outputs.jsonl"), "--scene", APT, "--out", str(rep)]) == 0
    agg = json.loads(rep.read_text())["aggregate"]["Overall"]
    assert agg["SR_p"] >= 95.0 and agg["SR_t"] >= 95.0 and agg["mIoU"] == 1.0


def test_eval_empty_and_mixed_outputs(run_dir, tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    rep = tmp_path / "r.json"
    assert main(["eval", "--tasks", str(run_dir), "--outputs", str(empty), "--scene", APT, "--out", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["aggregate"]["Overall"]["unscored_rate"] == 1.0
    assert len(doc["missing_outputs"]) == 20

    gt_lines = (run_dir / "gt_outputs.jsonl").read_text().splitlines()
    mixed = tmp_path / "mixed.jsonl"
    mixed.write_text("\n".join([gt_lines[0], "not json", '{"task_id": "nope"}', gt_lines[0], '{"x": 1}']) + "\n")
    capsys.readouterr()
    assert main(["eval", "--tasks", str(run_dir), "--outputs", str(mixed), "--scene", APT, "--out", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert len(doc["line_issues"]) == 4
    assert "invalid JSON" in capsys.readouterr().err
    assert len(doc["missing_outputs"]) == 19


def _records(path, n=10):
    lines = []
    for i in range(n):
        r = TokenLogProbRecord(f"s{i:02d}", (Token("a", -0.1), Token("b", -math.log(1 + i))), ((1, 2),))
        lines.append(json.dumps(r.to_dict()))
    path.write_text("\n".join(lines + ["{broken"]) + "\n")


def test_cogrs_command(tmp_path):
    recs = tmp_path / "r.jsonl"
    _records(recs)
    out = tmp_path / "keep_all"
    assert main(["cogrs", str(recs), "--band", "0.5,100", "--out", str(out)]) == 0
    assert (out / "kept_ids.txt").read_text().split() == [f"s{i:02d}" for i in range(10)]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["kept"] == 10 and len(summary["line_issues"]) == 1

    auto = tmp_path / "auto"
    assert main(["cogrs", str(recs), "--out", str(auto)]) == 0
    s = json.loads((auto / "summary.json").read_text())
    assert s["below"] + s["kept"] + s["above"] == 10 and 0 < s["kept"] < 10

    assert main(["cogrs", str(recs), "--band", "5,2", "--out", str(auto)]) == 1
    assert main(["cogrs", str(recs), "--band", "x", "--out", str(auto)]) == 1
