"""Mental-navigation task generation.

A task pairs a start and a target entity of a scene with the shortest
grid path between them and a ground-truth plan chain: a short list of
landmark-grounded steps that, decoded and executed in order, retraces the
path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np

from ._validation import check_random_state, round_sig
from .codec import PlanChain, PlanStep, encode_relation, offset_point, quantization_error
from .cogmap import CognitiveMap, Landmark, RelationDescriptor, VerticalRel
from .errors import ExhaustedSampling, NoPath, OutOfRange
from .planner import DEFAULT_AGENT_HEIGHT, GridPath, discretize, heading, shortest_path
from .scene import Box2D, Cell, OccupancyGrid, Pose, SceneAnnotation, WorldPoint

MAX_PATH_LENGTH = 48.0


class Stratum(str, Enum):
    SHORT = "Short"
    MEDIUM = "Medium"
    LONG = "Long"


def stratum_of(length: float) -> Stratum:
    """Bins [0, 6) Short, [6, 10) Medium, [10, 48] Long.

    Raises:
        OutOfRange: negative or above 48 m.
    """
    if not 0.0 <= length <= MAX_PATH_LENGTH:
        raise OutOfRange(f"path length {length} outside [0, {MAX_PATH_LENGTH}]", "length")
    if length < 6.0:
        return Stratum.SHORT
    if length < 10.0:
        return Stratum.MEDIUM
    return Stratum.LONG


@dataclass(frozen=True)
class ChainConfig:
    corridor: float = 1.5
    long_seg: float = 3.0
    min_step: float = 0.5
    step: float = 0.25
    agent_height: float = DEFAULT_AGENT_HEIGHT


@dataclass(frozen=True)
class NavQuery:
    s_src: str
    src_bbox: Box2D
    s_tgt: str
    tgt_bbox: Box2D


@dataclass(frozen=True)
class NavTask:
    task_id: str
    scene_id: str
    query: NavQuery
    gt_path: GridPath | None
    gt_path_length: float
    gt_chain: PlanChain
    stratum: Stratum
    start_pose: Pose

    @property
    def goal(self) -> WorldPoint:
        gx, gz = self.gt_chain.goal
        return WorldPoint(gx, self.start_pose.position.y, gz)

    def to_dict(self) -> dict[str, Any]:
        q = self.query
        out = {
            "task_id": self.task_id,
            "scene_id": self.scene_id,
            "query": {
                "src": {"desc": q.s_src, "bbox": [round_sig(v) for v in q.src_bbox.as_list()]},
                "tgt": {"desc": q.s_tgt, "bbox": [round_sig(v) for v in q.tgt_bbox.as_list()]},
            },
            "stratum": self.stratum.value,
            "gt_path_length_m": round_sig(self.gt_path_length),
            "gt_chain": self.gt_chain.to_dict(),
            "start_pose": {k: round_sig(v) for k, v in self.start_pose.to_dict().items()},
        }
        if self.gt_path is not None:
            out["gt_path"] = [list(c) for c in self.gt_path.cells]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


def task_from_dict(doc: dict[str, Any]) -> NavTask:
    """Load a task written by :meth:`NavTask.to_dict`."""
    from .codec import chain_from_dict  # local: avoids widening the module import surface

    issues: list = []
    chain = chain_from_dict(doc["gt_chain"], issues, "gt_chain")
    if chain is None or chain.goal is None:
        raise ValueError(f"task {doc.get('task_id')!r}: invalid gt_chain {[i.to_dict() for i in issues]}")
    q = doc["query"]
    sp = doc["start_pose"]
    return NavTask(
        task_id=str(doc["task_id"]),
        scene_id=str(doc["scene_id"]),
        query=NavQuery(q["src"]["desc"], Box2D(*q["src"]["bbox"]), q["tgt"]["desc"], Box2D(*q["tgt"]["bbox"])),
        gt_path=None,
        gt_path_length=float(doc["gt_path_length_m"]),
        gt_chain=chain,
        stratum=Stratum(doc["stratum"]),
        start_pose=Pose(WorldPoint(sp["x"], sp["y"], sp["z"]), sp["yaw"]),
    )


# -- entities and approach cells ------------------------------------------


@dataclass(frozen=True)
class Entity:
    id: str
    semantic: str
    bbox: Box2D

    @property
    def description(self) -> str:
        return f"{self.semantic} #{self.id}"


def map_entities(cmap: CognitiveMap, scene: SceneAnnotation) -> list[Entity]:
    """Landmarks followed by attached objects, in map order."""
    out = [Entity(lm.id, lm.semantic, lm.bbox) for lm in cmap.landmarks]
    for att in cmap.attachments:
        obj = scene.object_by_id(att.object_id)
        out.append(Entity(obj.id, obj.semantic, obj.footprint))
    return out


def approach_cell(grid: OccupancyGrid, box: Box2D, radius: float) -> Cell | None:
    """Navigable cell nearest to a box footprint, within ``radius`` of it.

    Ties resolve in row-major order.
    """
    res = grid.resolution
    c_lo = max(0, math.ceil((box.x_min - radius - grid.origin.x) / res))
    c_hi = min(grid.width - 1, math.floor((box.x_max + radius - grid.origin.x) / res))
    r_lo = max(0, math.ceil((box.z_min - radius - grid.origin.z) / res))
    r_hi = min(grid.height - 1, math.floor((box.z_max + radius - grid.origin.z) / res))
    if c_lo > c_hi or r_lo > r_hi:
        return None
    rr, cc = np.nonzero(grid.navigable[r_lo : r_hi + 1, c_lo : c_hi + 1])
    if rr.size == 0:
        return None
    xs = grid.origin.x + (cc + c_lo) * res
    zs = grid.origin.z + (rr + r_lo) * res
    dx = np.maximum(np.maximum(box.x_min - xs, 0.0), xs - box.x_max)
    dz = np.maximum(np.maximum(box.z_min - zs, 0.0), zs - box.z_max)
    d = np.hypot(dx, dz)
    d = np.where(d <= radius + 1e-9, d, np.inf)
    best = int(np.argmin(d))
    if not math.isfinite(d[best]):
        return None
    return (int(rr[best] + r_lo), int(cc[best] + c_lo))


# -- reasoning chains ------------------------------------------------------


@dataclass
class _Cue:
    index: int  # position in the discretized path
    anchor: Landmark
    synthetic: bool = False


def _nearest_by_box(point: tuple[float, float], landmarks: Sequence[Landmark]) -> tuple[Landmark, float]:
    best = min(landmarks, key=lambda lm: (lm.bbox.distance_to(*point), lm.id))
    return best, best.bbox.distance_to(*point)


def _best_index(indices: Sequence[int], pts: Sequence[tuple[float, float]], anchor_of) -> int:
    """Index whose position survives encode/decode with the least error (earliest on ties)."""
    return min(indices, key=lambda i: (round(quantization_error(anchor_of(i).center, pts[i]), 12), i))


def _make_step(anchor: Landmark, point: tuple[float, float]) -> PlanStep:
    d, dist = encode_relation(anchor.center, point)
    return PlanStep(anchor.id, anchor.semantic, RelationDescriptor(d, VerticalRel.SAME, dist), anchor.bbox)


def build_reasoning_chain(
    grid: OccupancyGrid,
    path: GridPath,
    cmap: CognitiveMap,
    target: str | None = None,
    cfg: ChainConfig = ChainConfig(),
) -> PlanChain:
    """Compress a grid path into landmark-grounded plan steps.

    The discretized path is walked once. Each time it comes within
    ``cfg.corridor`` of a landmark other than the current anchor, that
    landmark becomes the anchor of a new step; the step is placed at the
    point of that stretch whose relation to the landmark decodes most
    faithfully. Stretches longer than ``cfg.long_seg`` with no landmark in
    reach get synthetic cues anchored to the nearest landmark. Consecutive
    steps on the same anchor are merged (the later is kept) and steps closer
    than ``cfg.min_step`` to their predecessor are dropped. The final step
    is anchored to the target (when it is a landmark) or to the landmark
    nearest the path end, and the chain's goal is the path end.
    """
    landmarks = list(cmap.landmarks)
    if not landmarks:
        raise ValueError("map has no landmarks")
    wps = discretize(grid, path, cfg.step, cfg.agent_height)
    pts = [(w.x, w.z) for w in wps]
    arc = [0.0]
    for a, b in zip(pts, pts[1:]):
        arc.append(arc[-1] + math.dist(a, b))

    in_reach = [
        sorted((lm for lm in landmarks if lm.bbox.distance_to(*p) <= cfg.corridor), key=lambda lm: (lm.bbox.distance_to(*p), lm.id))
        for p in pts
    ]

    cues: list[_Cue] = []
    current: Landmark | None = None
    stretch: list[int] = []
    free: list[int] = []
    last_grounded: int | None = None

    def close_stretch() -> None:
        if current is not None and stretch:
            cues.append(_Cue(_best_index(stretch, pts, lambda i: current), current))

    def close_free(next_grounded: int | None) -> None:
        if not free:
            return
        lo = last_grounded if last_grounded is not None else free[0]
        hi = next_grounded if next_grounded is not None else free[-1]
        span = arc[hi] - arc[lo]
        if span <= cfg.long_seg:
            return
        n_cues = math.ceil(span / cfg.long_seg) - 1
        window = cfg.long_seg / 4.0
        for j in range(1, n_cues + 1):
            s = arc[lo] + span * j / (n_cues + 1)
            cand = [i for i in free if abs(arc[i] - s) <= window] or [min(free, key=lambda i: abs(arc[i] - s))]
            idx = _best_index(cand, pts, lambda i: _nearest_by_box(pts[i], landmarks)[0])
            cues.append(_Cue(idx, _nearest_by_box(pts[idx], landmarks)[0], synthetic=True))

    for i, reach in enumerate(in_reach):
        if current is not None and current in reach:
            stretch.append(i)
            last_grounded = i
            continue
        close_stretch()
        stretch = []
        if reach:
            close_free(i)
            free = []
            current = reach[0]
            stretch = [i]
            last_grounded = i
        else:
            current = None
            free.append(i)
    close_stretch()
    close_free(None)
    cues.sort(key=lambda c: c.index)

    end = pts[-1]
    ids = {lm.id: lm for lm in landmarks}
    if target is not None and target in ids:
        final_anchor = ids[target]
    else:
        final_anchor = min(landmarks, key=lambda lm: (math.dist(lm.center, end), lm.id))

    steps = [(_make_step(c.anchor, pts[c.index]), c.anchor) for c in cues]
    steps.append((_make_step(final_anchor, end), final_anchor))
    steps = _compact([s for s, _ in steps], cfg.min_step)
    return PlanChain(tuple(steps), end)


def _decoded(step: PlanStep) -> tuple[float, float]:
    return offset_point(step.bbox.center, step.rel.dir, step.rel.dist)


def _compact(steps: list[PlanStep], min_step: float) -> list[PlanStep]:
    """Merge same-anchor neighbours and drop tightly spaced steps until stable.

    The last step is terminal and always survives.
    """
    while True:
        merged: list[PlanStep] = []
        for s in steps:
            if merged and merged[-1].lm == s.lm:
                merged[-1] = s
            else:
                merged.append(s)
        terminal = merged[-1]
        kept: list[PlanStep] = []
        for s in merged[:-1]:
            if kept and math.dist(_decoded(kept[-1]), _decoded(s)) < min_step:
                continue
            kept.append(s)
        while kept and math.dist(_decoded(kept[-1]), _decoded(terminal)) < min_step:
            kept.pop()
        kept.append(terminal)
        if len(kept) == len(steps) and all(a is b for a, b in zip(kept, steps)):
            return kept
        steps = kept


# -- sampling --------------------------------------------------------------


@dataclass(frozen=True)
class TaskConfig:
    chain: ChainConfig = ChainConfig()
    approach_radius: float = 1.0
    max_tries: int = 50
    max_length: float = MAX_PATH_LENGTH


def sample_task(
    scene: SceneAnnotation,
    cmap: CognitiveMap,
    seed: int,
    cfg: TaskConfig = TaskConfig(),
    task_id: str | None = None,
) -> NavTask:
    """Draw a start/target entity pair and build its ground truth.

    Pairs are redrawn when either entity has no approach cell, when the
    cells coincide, are disconnected, or the path exceeds ``cfg.max_length``.

    Raises:
        ExhaustedSampling: no usable pair within ``cfg.max_tries`` draws.
    """
    grid = scene.grid
    entities = map_entities(cmap, scene)
    if len(entities) < 2:
        raise ExhaustedSampling("need at least two entities", "entities")
    rng = check_random_state(seed)
    for _ in range(cfg.max_tries):
        i, j = (int(v) for v in rng.choice(len(entities), size=2, replace=False))
        src, tgt = entities[i], entities[j]
        a = approach_cell(grid, src.bbox, cfg.approach_radius)
        b = approach_cell(grid, tgt.bbox, cfg.approach_radius)
        if a is None or b is None or a == b:
            continue
        try:
            path = shortest_path(grid, a, b)
        except NoPath:
            continue
        if path.length > cfg.max_length:
            continue
        chain = build_reasoning_chain(grid, path, cmap, target=tgt.id, cfg=cfg.chain)
        first, second = path.cells[0], path.cells[1]
        yaw = heading(second[1] - first[1], second[0] - first[0])
        return NavTask(
            task_id=task_id or f"{scene.scene_id}-{seed}",
            scene_id=scene.scene_id,
            query=NavQuery(src.description, src.bbox, tgt.description, tgt.bbox),
            gt_path=path,
            gt_path_length=path.length,
            gt_chain=chain,
            stratum=stratum_of(path.length),
            start_pose=Pose(grid.cell_to_world(a, cfg.chain.agent_height), yaw),
        )
    raise ExhaustedSampling(f"no valid task after {cfg.max_tries} draws (seed {seed})", "entities")


def generate_tasks(
    scene: SceneAnnotation,
    cmap: CognitiveMap,
    n: int,
    seed: int,
    cfg: TaskConfig = TaskConfig(),
) -> list[NavTask]:
    """``n`` tasks with per-task seeds derived from ``seed``."""
    seeds = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)
    return [
        sample_task(scene, cmap, int(s), cfg, task_id=f"{scene.scene_id}-{seed}-{k:04d}")
        for k, s in enumerate(seeds)
    ]
