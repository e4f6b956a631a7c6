"""Text-based and execution-verified evaluation of mental-navigation answers.

Static track: landmark mIoU and F1 against the ground-truth map, the
navigation error (NE) of the predicted target, NE of the last decoded
waypoint, and target success SR_t (NE < 1 m).

Interactive track: the decoded waypoints are executed leg by leg on the
occupancy grid. SR_p requires every leg to be traversable and the final
position to lie within 1 m of the target; SPL weights that success by
``shortest / max(shortest, traveled)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .codec import ModelOutput, decode_chain, map_from_chain
from .cogmap import CognitiveMap, Landmark, build_cognitive_map
from ._validation import normalize_label
from .errors import EmptyDecodedChain, NoPath, SnapFailure
from .planner import geodesic_distance, shortest_path, snap_to_navigable
from .scene import Cell, OccupancyGrid, SceneAnnotation, WorldPoint
from .tasks import NavTask, Stratum

SUCCESS_DISTANCE = 1.0
STRATA = (Stratum.SHORT, Stratum.MEDIUM, Stratum.LONG)


@dataclass(frozen=True)
class EvalConfig:
    iou_thresh: float = 0.25
    snap_radius: float = 0.5
    success_distance: float = SUCCESS_DISTANCE
    agent_height: float = 0.8


# -- static metrics ---------------------------------------------------------


def match_landmarks(pred: Sequence[Landmark], gt: Sequence[Landmark]) -> list[tuple[int, int, float]]:
    """Greedy one-to-one matching as ``(gt_index, pred_index, iou)`` triples.

    Candidates share a normalized semantic label and overlap with positive
    IoU. They are taken by descending IoU, ties broken by ground-truth id
    and then prediction order.
    """
    cands = []
    for gi, g in enumerate(gt):
        gsem = normalize_label(g.semantic)
        for pi, p in enumerate(pred):
            if normalize_label(p.semantic) != gsem:
                continue
            iou = g.bbox.iou(p.bbox)
            if iou > 0:
                cands.append((-iou, g.id, gi, pi))
    cands.sort()
    used_g: set[int] = set()
    used_p: set[int] = set()
    out = []
    for neg_iou, _, gi, pi in cands:
        if gi in used_g or pi in used_p:
            continue
        used_g.add(gi)
        used_p.add(pi)
        out.append((gi, pi, -neg_iou))
    return out


def landmark_miou(pred: CognitiveMap | None, gt: CognitiveMap) -> float:
    """Sum of matched IoU over the number of ground-truth landmarks."""
    if not gt.landmarks:
        raise ValueError("ground-truth map has no landmarks")
    if pred is None:
        return 0.0
    matches = match_landmarks(pred.landmarks, gt.landmarks)
    return math.fsum(iou for _, _, iou in matches) / len(gt.landmarks)


def landmark_f1(pred: CognitiveMap | None, gt: CognitiveMap, iou_thresh: float = 0.25) -> tuple[float, float, float]:
    """``(precision, recall, f1)`` with true positives at IoU >= ``iou_thresh``."""
    if pred is None or not pred.landmarks:
        return (0.0, 0.0, 0.0)
    tp = sum(1 for _, _, iou in match_landmarks(pred.landmarks, gt.landmarks) if iou >= iou_thresh)
    precision = tp / len(pred.landmarks)
    recall = tp / len(gt.landmarks) if gt.landmarks else 0.0
    if precision + recall == 0:
        return (precision, recall, 0.0)
    return (precision, recall, 2 * precision * recall / (precision + recall))


def navigation_error(p_hat: WorldPoint, p_star: WorldPoint) -> float:
    """Ground-plane Euclidean distance."""
    return math.hypot(p_hat.x - p_star.x, p_hat.z - p_star.z)


def target_success(ne: float, threshold: float = SUCCESS_DISTANCE) -> bool:
    """SR_t indicator: strictly closer than ``threshold`` meters."""
    return ne < threshold


def ne_waypoint(decoded: Sequence[WorldPoint], p_star: WorldPoint) -> float:
    if not decoded:
        raise EmptyDecodedChain("no decoded waypoint", "chain.steps")
    return navigation_error(decoded[-1], p_star)


def spl(success: bool, shortest: float, traveled: float) -> float:
    if shortest < 0 or traveled < 0:
        raise ValueError("lengths must be non-negative")
    if not success:
        return 0.0
    denom = max(shortest, traveled)
    return 1.0 if denom == 0 else shortest / denom


# -- execution --------------------------------------------------------------


@dataclass(frozen=True)
class ExecutionResult:
    executable: bool
    traveled: float
    final_position: WorldPoint
    failed_leg: int | None = None
    cells: tuple[Cell, ...] = field(default=(), repr=False)


def execute_plan(
    grid: OccupancyGrid,
    start: Cell,
    waypoints: Sequence[WorldPoint],
    snap_radius: float = 0.5,
    y: float = 0.8,
) -> ExecutionResult:
    """Walk ``start -> w1 -> ... -> wn`` with grid shortest paths.

    Each waypoint is snapped to the nearest navigable cell within
    ``snap_radius``. The first snap or leg failure stops execution; the
    result then reports the failed leg index and the last reached cell.
    """
    if not grid.is_navigable(start):
        raise ValueError(f"start cell {start} is not navigable")
    cur = start
    traveled_ax = traveled_dg = 0
    trail: list[Cell] = [start]
    for k, wp in enumerate(waypoints):
        cell = snap_to_navigable(grid, wp, snap_radius)
        if cell is None:
            return _stopped(grid, cur, traveled_ax, traveled_dg, k, trail, y)
        try:
            leg = shortest_path(grid, cur, cell)
        except NoPath:
            return _stopped(grid, cur, traveled_ax, traveled_dg, k, trail, y)
        traveled_ax += leg.axial
        traveled_dg += leg.diagonal
        trail.extend(leg.cells[1:])
        cur = cell
    traveled = (traveled_ax + traveled_dg * math.sqrt(2.0)) * grid.resolution
    return ExecutionResult(True, traveled, grid.cell_to_world(cur, y), None, tuple(trail))


def _stopped(grid, cur, ax, dg, k, trail, y) -> ExecutionResult:
    traveled = (ax + dg * math.sqrt(2.0)) * grid.resolution
    return ExecutionResult(False, traveled, grid.cell_to_world(cur, y), k, tuple(trail))


# -- per-instance ------------------------------------------------------------


@dataclass
class InstanceReport:
    task_id: str
    stratum: str
    ne: float | None  # None: unscored (no decodable plan)
    ne_waypoint: float | None
    sr_t: bool
    sr_p: bool
    spl: float
    miou: float
    f1: float
    precision: float
    recall: float
    issues: int
    executable: bool = False
    traveled: float = 0.0

    @property
    def scored(self) -> bool:
        return self.ne is not None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def evaluate_instance(
    task: NavTask,
    output: ModelOutput,
    scene: SceneAnnotation,
    gt_map: CognitiveMap | None = None,
    cfg: EvalConfig = EvalConfig(),
) -> InstanceReport:
    """Score one model answer on both tracks.

    The chain is decoded against the predicted map, or, when the answer has
    no valid map, against the boxes its steps carry. An answer whose chain
    is missing or fully undecodable is unscored: NE is ``None`` and every
    success metric is zero. Without ``gt_map`` the reference map is rebuilt
    from the scene with default builder settings.
    """
    if gt_map is None:
        gt_map = build_cognitive_map(scene)
    grid = scene.grid
    p_star = task.goal
    n_issues = len(output.issues)
    miou = landmark_miou(output.map, gt_map)
    precision, recall, f1 = landmark_f1(output.map, gt_map, cfg.iou_thresh)
    base = dict(task_id=task.task_id, stratum=task.stratum.value, miou=miou, f1=f1, precision=precision, recall=recall)

    chain = output.chain
    if chain is None:
        return InstanceReport(ne=None, ne_waypoint=None, sr_t=False, sr_p=False, spl=0.0, issues=max(n_issues, 1), **base)
    decode_map = output.map if output.map is not None else map_from_chain(chain)
    try:
        raw, dec_issues = decode_chain(decode_map, chain, use_goal=False, y=cfg.agent_height)
    except EmptyDecodedChain:
        return InstanceReport(ne=None, ne_waypoint=None, sr_t=False, sr_p=False, spl=0.0, issues=n_issues + len(chain.steps), **base)
    n_issues += len(dec_issues)
    waypoints = list(raw)
    if chain.goal is not None:
        waypoints[-1] = WorldPoint(chain.goal[0], cfg.agent_height, chain.goal[1])
    p_hat = waypoints[-1]

    ne = navigation_error(p_hat, p_star)
    ne_wp = ne_waypoint(raw, p_star)
    start = snap_to_navigable(grid, task.start_pose.position, cfg.snap_radius)
    if start is None:
        raise SnapFailure("task start pose is off the navigable grid", "start_pose")
    result = execute_plan(grid, start, waypoints, cfg.snap_radius, cfg.agent_height)
    sr_p = result.executable and target_success(navigation_error(result.final_position, p_star), cfg.success_distance)
    shortest = geodesic_distance(grid, grid.cell_to_world(start, cfg.agent_height), p_star, cfg.snap_radius)
    return InstanceReport(
        ne=ne,
        ne_waypoint=ne_wp,
        sr_t=target_success(ne, cfg.success_distance),
        sr_p=sr_p,
        spl=spl(sr_p, shortest, result.traveled),
        issues=n_issues,
        executable=result.executable,
        traveled=result.traveled,
        **base,
    )


# -- aggregation ---------------------------------------------------------------


@dataclass
class StratumSummary:
    n: int
    ne: float | None
    ne_waypoint: float | None
    sr_t: float
    sr_p: float
    spl: float
    miou: float
    f1: float
    unscored_rate: float


@dataclass
class BenchmarkReport:
    instances: list[InstanceReport]
    strata: dict[str, StratumSummary]

    @property
    def overall(self) -> StratumSummary:
        return self.strata["Overall"]

    def to_dict(self) -> dict[str, Any]:
        table = {}
        for name, s in self.strata.items():
            table[name] = {
                "n": s.n,
                "NE": None if s.ne is None else round(s.ne, 2),
                "NE_waypoint": None if s.ne_waypoint is None else round(s.ne_waypoint, 2),
                "SR_t": round(100 * s.sr_t, 1),
                "SR_p": round(100 * s.sr_p, 1),
                "SPL": round(100 * s.spl, 1),
                "mIoU": round(s.miou, 4),
                "F1": round(s.f1, 4),
                "unscored_rate": round(s.unscored_rate, 4),
            }
        return {"aggregate": table, "instances": [r.to_dict() for r in self.instances]}

    def table(self) -> str:
        cols = ["Overall"] + [s.value for s in STRATA]
        lines = [f"{'':<8}" + "".join(f"{c:>34}" for c in cols)]
        lines.append(f"{'':<8}" + "".join(f"{'NE':>10}{'SR_t':>8}{'SR_p':>8}{'SPL':>8}" for _ in cols))
        row = f"{'model':<8}"
        for c in cols:
            s = self.strata[c]
            ne = "-" if s.ne is None else f"{s.ne:.2f}"
            row += f"{ne:>10}{100 * s.sr_t:>8.1f}{100 * s.sr_p:>8.1f}{100 * s.spl:>8.1f}"
        lines.append(row)
        o = self.overall
        lines.append(f"mIoU {o.miou:.4f}  F1 {o.f1:.4f}  unscored_rate {o.unscored_rate:.4f}  n {o.n}")
        return "\n".join(lines)


def _summarize(reports: Sequence[InstanceReport]) -> StratumSummary:
    n = len(reports)
    if n == 0:
        return StratumSummary(0, None, None, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    scored = [r for r in reports if r.scored]
    mean = lambda xs: math.fsum(xs) / len(xs)  # noqa: E731
    return StratumSummary(
        n=n,
        ne=mean([r.ne for r in scored]) if scored else None,
        ne_waypoint=mean([r.ne_waypoint for r in scored]) if scored else None,
        sr_t=mean([float(r.sr_t) for r in reports]),
        sr_p=mean([float(r.sr_p) for r in reports]),
        spl=mean([r.spl for r in reports]),
        miou=mean([r.miou for r in reports]),
        f1=mean([r.f1 for r in reports]),
        unscored_rate=(n - len(scored)) / n,
    )


def aggregate(reports: Iterable[InstanceReport], strata: Mapping[str, Stratum | str] | None = None) -> BenchmarkReport:
    """Per-stratum and overall means; instances are sorted by task id.

    ``strata`` maps task ids to strata and overrides each report's own
    stratum label.
    """
    reports = sorted(reports, key=lambda r: r.task_id)
    if strata is not None:
        for r in reports:
            s = strata[r.task_id]
            r.stratum = s.value if isinstance(s, Stratum) else str(s)
    out = {"Overall": _summarize(reports)}
    for s in STRATA:
        out[s.value] = _summarize([r for r in reports if r.stratum == s.value])
    return BenchmarkReport(reports, out)
