"""Command-line front end: ``mentalnav <command> ...``.

Exit status is 0 on success, 1 when an input fails validation and 2 on
I/O errors. Diagnostics go to stderr and name the offending field path.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Sequence

from .codec import ModelOutput, ParseIssue, map_from_dict, parse_model_output, serialize_output
from .cogmap import CognitiveMap, build_cognitive_map
from .cogrs import CogRSFilter, read_records
from .config import RunConfig
from .errors import ConfigError, MentalNavError, SchemaError
from .evaluation import aggregate, evaluate_instance
from .scene import SceneAnnotation, parse_scene
from .tasks import NavTask, Stratum, generate_tasks, task_from_dict

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class _Invalid(Exception):
    pass


# -- helpers ---------------------------------------------------------------


def _load_config(args) -> RunConfig:
    doc: dict[str, Any] = {}
    if args.config:
        doc = RunConfig.load(args.config).to_dict()
    for item in args.param or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}", "--param")
        try:
            doc[key] = json.loads(raw)
        except json.JSONDecodeError:
            doc[key] = raw
    return RunConfig.from_dict(doc)


def _load_scene(path: str, cfg: RunConfig) -> SceneAnnotation:
    scene = parse_scene(Path(path).read_bytes())
    if cfg.resolution is not None and abs(scene.grid.resolution - cfg.resolution) > 1e-12:
        raise ConfigError(
            f"scene grid resolution {scene.grid.resolution} differs from configured {cfg.resolution}", "resolution"
        )
    return scene


def _load_map(path: Path) -> CognitiveMap:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", str(path)) from None
    issues: list[ParseIssue] = []
    cmap = map_from_dict(doc, issues, "map")
    errors = [i for i in issues if i.severity == "error"]
    if cmap is None or errors:
        first = errors[0] if errors else ParseIssue("error", "map", "invalid map")
        raise SchemaError(first.message, first.path)
    return cmap


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("--seed is required for this command", "--seed")
    return args.seed


def _err(msg: str) -> None:
    print(f"mentalnav: {msg}", file=sys.stderr)


# -- commands --------------------------------------------------------------


def cmd_build_map(args) -> int:
    cfg = _load_config(args)
    seed = _require_seed(args)
    scene = _load_scene(args.scene, cfg)
    cmap = build_cognitive_map(scene, **cfg.builder_params(seed))
    _write(args.out, cmap.to_json())
    print(
        f"{scene.scene_id}: {len(cmap.landmarks)} landmarks, {len(cmap.regions)} regions, "
        f"{len(cmap.attachments)} attached objects",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_gen_tasks(args) -> int:
    cfg = _load_config(args)
    seed = _require_seed(args)
    if args.out is None:
        raise ConfigError("--out directory is required", "--out")
    scene = _load_scene(args.scene, cfg)
    cmap = _load_map(Path(args.map)) if args.map else build_cognitive_map(scene, **cfg.builder_params(seed))
    tasks = generate_tasks(scene, cmap, args.n, seed, cfg.task_config())

    out = Path(args.out)
    (out / "tasks").mkdir(parents=True, exist_ok=True)
    for t in tasks:
        (out / "tasks" / f"{t.task_id}.json").write_text(t.to_json(), encoding="utf-8")
    (out / "map.json").write_text(cmap.to_json(), encoding="utf-8")
    gt_lines = [json.dumps({"task_id": t.task_id, "model_text": serialize_output(cmap, t.gt_chain)}) for t in tasks]
    (out / "gt_outputs.jsonl").write_text("".join(line + "\n" for line in gt_lines), encoding="utf-8")
    counts = Counter(t.stratum.value for t in tasks)
    manifest = {
        "scene_id": scene.scene_id,
        "seed": seed,
        "n": len(tasks),
        "strata": {s.value: counts.get(s.value, 0) for s in Stratum},
        "tasks": [t.task_id for t in tasks],
        "config": cfg.to_dict(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    print(f"{len(tasks)} tasks -> {out}  " + "  ".join(f"{k}={v}" for k, v in manifest["strata"].items()), file=sys.stderr)
    return EXIT_OK


def _load_tasks(tasks_dir: Path) -> dict[str, NavTask]:
    src = tasks_dir / "tasks" if (tasks_dir / "tasks").is_dir() else tasks_dir
    tasks = {}
    for p in sorted(src.glob("*.json")):
        if p.name in ("manifest.json", "map.json"):
            continue
        try:
            t = task_from_dict(json.loads(p.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid task file: {exc}", str(p)) from None
        tasks[t.task_id] = t
    return tasks


def _read_outputs(path: Path, tasks: dict[str, NavTask]) -> tuple[dict[str, str], list[str]]:
    texts: dict[str, str] = {}
    issues = []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            issues.append(f"line {n}: invalid JSON ({exc.msg})")
            continue
        if not isinstance(doc, dict) or not isinstance(doc.get("task_id"), str):
            issues.append(f"line {n}: missing task_id")
            continue
        tid = doc["task_id"]
        if tid not in tasks:
            issues.append(f"line {n}: unknown task_id {tid!r}")
        elif tid in texts:
            issues.append(f"line {n}: duplicate task_id {tid!r}; first answer kept")
        else:
            text = doc.get("model_text", "")
            texts[tid] = text if isinstance(text, str) else json.dumps(text)
    return texts, issues


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    scene = _load_scene(args.scene, cfg)
    tasks_dir = Path(args.tasks)
    tasks = _load_tasks(tasks_dir)
    if not tasks:
        raise SchemaError("no task files found", str(tasks_dir))
    map_path = Path(args.map) if args.map else tasks_dir / "map.json"
    gt_map = _load_map(map_path)
    texts, line_issues = _read_outputs(Path(args.outputs), tasks)
    for msg in line_issues:
        _err(msg)

    ecfg = cfg.eval_config()
    reports = []
    for tid in sorted(tasks):
        out: ModelOutput = parse_model_output(texts.get(tid, ""), strict=args.strict_parse)
        reports.append(evaluate_instance(tasks[tid], out, scene, gt_map, ecfg))
    bench = aggregate(reports)
    doc = bench.to_dict()
    doc["line_issues"] = line_issues
    doc["missing_outputs"] = sorted(set(tasks) - set(texts))
    _write(args.out, json.dumps(doc, sort_keys=True, indent=1) + "\n")
    print(bench.table())
    return EXIT_OK


def cmd_cogrs(args) -> int:
    cfg = _load_config(args)
    if args.out is None:
        raise ConfigError("--out directory is required", "--out")
    records, issues = read_records(Path(args.records).read_text(encoding="utf-8").splitlines())
    for msg in issues:
        _err(msg)
    if args.band == "auto":
        band = cfg.band
    else:
        try:
            band = tuple(float(v) for v in args.band.split(","))
        except ValueError:
            raise ConfigError(f"expected 'auto' or 'lo,hi', got {args.band!r}", "--band") from None
        if len(band) != 2:
            raise ConfigError(f"expected 'auto' or 'lo,hi', got {args.band!r}", "--band")
    lo, hi = cfg.band_percentiles
    filt = CogRSFilter(band=band, lower_percentile=lo, upper_percentile=hi)
    result = filt.fit_transform(records)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = result.summary()
    summary["line_issues"] = issues
    summary["perplexities"] = result.perplexities
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    (out / "kept_ids.txt").write_text("".join(sid + "\n" for sid in result.kept), encoding="utf-8")
    print(
        f"band [{result.band.tau_min:.4f}, {result.band.tau_max:.4f}]: below {result.below}, "
        f"kept {len(result.kept)}, above {result.above}, skipped {len(result.skipped)}"
    )
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    from .acceptance import run_all

    only = None if not args.only else {int(v) for v in args.only.split(",")}
    results = run_all(only)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVALID


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--param", action="append", metavar="KEY=VALUE", help="override one config field (JSON value)")
    common.add_argument("--seed", type=int, help="random seed (required by build-map and gen-tasks)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--strict-parse", action="store_true", help="model text must be exactly one JSON object")

    p = argparse.ArgumentParser(prog="mentalnav", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build-map", parents=[common], help="scene annotation -> cognitive map JSON")
    s.add_argument("scene")
    s.set_defaults(func=cmd_build_map)

    s = sub.add_parser("gen-tasks", parents=[common], help="sample navigation tasks with ground truth")
    s.add_argument("scene")
    s.add_argument("--map", help="cognitive map JSON (built from the scene when omitted)")
    s.add_argument("-n", type=int, default=100, help="number of tasks")
    s.set_defaults(func=cmd_gen_tasks)

    s = sub.add_parser("eval", parents=[common], help="score model outputs on both tracks")
    s.add_argument("--tasks", required=True, help="directory written by gen-tasks")
    s.add_argument("--outputs", required=True, help="JSON lines of {task_id, model_text}")
    s.add_argument("--scene", required=True)
    s.add_argument("--map", help="ground-truth map (default: <tasks>/map.json)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("cogrs", parents=[common], help="perplexity-band filtering of token records")
    s.add_argument("records", help="JSON lines of token log-prob records")
    s.add_argument("--band", default="auto", help="'auto' or 'tau_min,tau_max'")
    s.set_defaults(func=cmd_cogrs)

    s = sub.add_parser("selfcheck", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_selfcheck)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "n", 1) < 1:
        _err("-n must be positive")
        return EXIT_INVALID
    try:
        return args.func(args)
    except MentalNavError as exc:
        _err(f"{type(exc).__name__}: {exc.path or '<root>'}: {exc.message}")
        return EXIT_INVALID
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
