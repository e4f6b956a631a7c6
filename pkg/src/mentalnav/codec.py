"""Plan chains: types, lenient parsing of model output, and decoding.

A model answer is expected to contain one JSON object of the form::

    {"map": {"regions": [...], "landmarks": [...], "objects": [...]},
     "chain": {"steps": [{"lm", "sem", "dir", "dist", "h", "bbox"}, ...],
               "goal": [x, z]}}

Parsing never raises. Problems are reported as ``ParseIssue`` records and
a structure with any error-severity issue is withheld from the result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

from ._validation import normalize_label, round_sig
from .cogmap import (
    CognitiveMap,
    DirBin,
    Landmark,
    ObjectAttachment,
    Region,
    RelationDescriptor,
    VerticalRel,
    bearing_bin,
)
from .errors import AmbiguousSemantic, EmptyDecodedChain, UnknownLandmark
from .scene import Box2D, WorldPoint

EXCERPT_CHARS = 256
_MAX_DECODE_ATTEMPTS = 2000


@dataclass(frozen=True)
class PlanStep:
    lm: str | None
    sem: str
    rel: RelationDescriptor
    bbox: Box2D | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "lm": self.lm,
            "sem": self.sem,
            "dir": self.rel.dir.value,
            "dist": round_sig(self.rel.dist),
            "h": self.rel.h.value,
        }
        if self.bbox is not None:
            out["bbox"] = [round_sig(v) for v in self.bbox.as_list()]
        return out


@dataclass(frozen=True)
class PlanChain:
    steps: tuple[PlanStep, ...]
    goal: tuple[float, float] | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"steps": [s.to_dict() for s in self.steps]}
        if self.goal is not None:
            out["goal"] = [round_sig(self.goal[0]), round_sig(self.goal[1])]
        return out


@dataclass(frozen=True)
class ParseIssue:
    severity: str  # "error" | "warning"
    path: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {"severity": self.severity, "path": self.path, "message": self.message}


@dataclass
class ModelOutput:
    map: CognitiveMap | None = None
    chain: PlanChain | None = None
    issues: list[ParseIssue] = field(default_factory=list)
    raw_excerpt: str = ""

    @property
    def n_errors(self) -> int:
        return sum(1 for i in self.issues if i.severity == "error")

    def to_dict(self) -> dict[str, Any]:
        return {
            "map_present": self.map is not None,
            "chain_present": self.chain is not None,
            "issues": [i.to_dict() for i in self.issues],
            "raw_excerpt": self.raw_excerpt,
        }


def serialize_output(cmap: CognitiveMap | None, chain: PlanChain | None) -> str:
    """Canonical JSON answer text for a map and chain."""
    doc: dict[str, Any] = {}
    if cmap is not None:
        doc["map"] = cmap.to_dict()
    if chain is not None:
        doc["chain"] = chain.to_dict()
    return json.dumps(doc, sort_keys=True)


# -- extraction ------------------------------------------------------------


def extract_json_object(text: str, strict: bool = False) -> dict | None:
    """First well-formed JSON object in ``text``.

    In strict mode the whole text (after stripping) must be one object.
    Otherwise every ``{`` is tried as a start position, which tolerates
    surrounding prose and fenced code blocks.
    """
    if strict:
        try:
            doc = json.loads(text.strip())
        except (json.JSONDecodeError, RecursionError):
            return None
        return doc if isinstance(doc, dict) else None
    decoder = json.JSONDecoder()
    pos = text.find("{")
    attempts = 0
    while pos != -1 and attempts < _MAX_DECODE_ATTEMPTS:
        attempts += 1
        try:
            doc, _ = decoder.raw_decode(text, pos)
        except (json.JSONDecodeError, RecursionError):
            doc = None
        if isinstance(doc, dict):
            return doc
        pos = text.find("{", pos + 1)
    return None


def parse_model_output(text: str | bytes, strict: bool = False) -> ModelOutput:
    """Extract and validate a cognitive map and plan chain from model text."""
    issues: list[ParseIssue] = []
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError:
            text = text.decode("utf-8", errors="replace")
            issues.append(ParseIssue("warning", "", "input is not valid UTF-8; undecodable bytes replaced"))
    elif not isinstance(text, str):
        text = str(text)
    out = ModelOutput(issues=issues, raw_excerpt=text[:EXCERPT_CHARS])

    doc = extract_json_object(text, strict=strict)
    if doc is None:
        issues.append(ParseIssue("error", "", "no JSON object found" if not strict else "text is not a JSON object"))
        return out

    map_doc = doc.get("map", doc.get("cognitive_map"))
    chain_doc = doc.get("chain", doc.get("reasoning_chain"))
    if map_doc is None and "landmarks" in doc:
        map_doc = doc
    if chain_doc is None and "steps" in doc:
        chain_doc = doc
    if map_doc is None:
        issues.append(ParseIssue("error", "map", "missing cognitive map"))
    else:
        out.map = _guarded(map_from_dict, map_doc, "map", issues)
    if chain_doc is None:
        issues.append(ParseIssue("error", "chain", "missing plan chain"))
    else:
        out.chain = _guarded(chain_from_dict, chain_doc, "chain", issues)
    return out


def _guarded(fn, doc, path, issues):
    # Validators report through ``issues``; anything unexpected is a bug
    # in the input shape we did not anticipate and must not escape.
    try:
        return fn(doc, issues, path)
    except (TypeError, ValueError, KeyError, AttributeError, OverflowError, RecursionError) as exc:
        issues.append(ParseIssue("error", path, f"malformed structure: {exc}"))
        return None


# -- field validators ------------------------------------------------------


class _Collector:
    def __init__(self, issues: list[ParseIssue]):
        self.issues = issues
        self.failed = False

    def error(self, path: str, message: str) -> None:
        self.failed = True
        self.issues.append(ParseIssue("error", path, message))

    def warn(self, path: str, message: str) -> None:
        self.issues.append(ParseIssue("warning", path, message))

    def number(self, obj: dict, key: str, path: str, *, required: bool = True, minimum: float | None = None):
        p = f"{path}.{key}"
        if key not in obj or obj[key] is None:
            if required:
                self.error(p, "missing required field")
            return None
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(float(v)):
            self.error(p, "expected a finite number")
            return None
        v = float(v)
        if minimum is not None and v < minimum:
            self.error(p, f"expected a number >= {minimum}")
            return None
        return v

    def text(self, obj: dict, key: str, path: str, *, required: bool = True):
        p = f"{path}.{key}"
        if key not in obj or obj[key] is None:
            if required:
                self.error(p, "missing required field")
            return None
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (str, int)):
            self.error(p, "expected a string")
            return None
        v = str(v)
        if not v.strip():
            self.error(p, "expected a non-empty string")
            return None
        return v

    def bbox(self, obj: dict, key: str, path: str, *, required: bool = True) -> Box2D | None:
        p = f"{path}.{key}"
        if key not in obj or obj[key] is None:
            if required:
                self.error(p, "missing required field")
            return None
        v = obj[key]
        if not isinstance(v, list) or len(v) != 4:
            self.error(p, "expected [x_min, x_max, z_min, z_max]")
            return None
        if not all(not isinstance(x, bool) and isinstance(x, (int, float)) and math.isfinite(float(x)) for x in v):
            self.error(p, "expected four finite numbers")
            return None
        x0, x1, z0, z1 = (float(x) for x in v)
        if x0 > x1 or z0 > z1:
            self.error(p, "inverted box")
            return None
        return Box2D(x0, x1, z0, z1)

    def enum(self, obj: dict, key: str, path: str, kind, *, required: bool = True, default=None):
        p = f"{path}.{key}"
        if key not in obj or obj[key] is None:
            if required:
                self.error(p, "missing required field")
            else:
                self.warn(p, f"missing; assuming {default.value}")
            return default
        v = obj[key]
        if not isinstance(v, str):
            self.error(p, "expected a string")
            return None
        token = v.strip()
        for member in kind:
            if token.upper() == member.value.upper():
                return member
        self.error(p, f"expected one of {[m.value for m in kind]}")
        return None


def _as_list(c: _Collector, obj: dict, key: str, path: str, *, required: bool = True) -> list:
    p = f"{path}.{key}"
    if key not in obj:
        if required:
            c.error(p, "missing required field")
        return []
    v = obj[key]
    if not isinstance(v, list):
        c.error(p, "expected an array")
        return []
    return v


def map_from_dict(doc: Any, issues: list[ParseIssue], path: str = "map") -> CognitiveMap | None:
    """Validate a cognitive map document; ``None`` when any error was found."""
    c = _Collector(issues)
    if not isinstance(doc, dict):
        c.error(path, "expected an object")
        return None

    landmarks: list[Landmark] = []
    seen: set[str] = set()
    for i, raw in enumerate(_as_list(c, doc, "landmarks", path)):
        p = f"{path}.landmarks[{i}]"
        if not isinstance(raw, dict):
            c.error(p, "expected an object")
            continue
        lid = c.text(raw, "id", p)
        sem = c.text(raw, "semantic", p)
        box = c.bbox(raw, "bbox", p)
        if lid is None or sem is None or box is None:
            continue
        if lid in seen:
            c.error(f"{p}.id", f"duplicate landmark id {lid!r}")
            continue
        seen.add(lid)
        landmarks.append(Landmark(lid, normalize_label(sem), box))

    regions: list[Region] = []
    for i, raw in enumerate(_as_list(c, doc, "regions", path, required=False)):
        p = f"{path}.regions[{i}]"
        if not isinstance(raw, dict):
            c.error(p, "expected an object")
            continue
        rid = c.text(raw, "id", p)
        members = _as_list(c, raw, "landmarks", p)
        ids = []
        for j, m in enumerate(members):
            if isinstance(m, bool) or not isinstance(m, (str, int)):
                c.error(f"{p}.landmarks[{j}]", "expected a landmark id")
                continue
            if str(m) not in seen:
                c.warn(f"{p}.landmarks[{j}]", f"unknown landmark {m!r}")
            ids.append(str(m))
        label = raw.get("label")
        if rid is not None:
            regions.append(Region(rid, tuple(ids), label if isinstance(label, str) else None))

    attachments: list[ObjectAttachment] = []
    for i, raw in enumerate(_as_list(c, doc, "objects", path, required=False)):
        p = f"{path}.objects[{i}]"
        if not isinstance(raw, dict):
            c.error(p, "expected an object")
            continue
        oid = c.text(raw, "id", p)
        sem = c.text(raw, "semantic", p)
        anchor = c.text(raw, "anchor", p)
        d = c.enum(raw, "dir", p, DirBin)
        h = c.enum(raw, "h", p, VerticalRel, required=False, default=VerticalRel.SAME)
        dist = c.number(raw, "dist", p, minimum=0.0)
        if None in (oid, sem, anchor, d, h, dist):
            continue
        if anchor not in seen:
            c.warn(f"{p}.anchor", f"unknown landmark {anchor!r}")
        attachments.append(ObjectAttachment(oid, normalize_label(sem), anchor, RelationDescriptor(d, h, dist)))

    if c.failed:
        return None
    return CognitiveMap(tuple(regions), tuple(landmarks), tuple(attachments))


def chain_from_dict(doc: Any, issues: list[ParseIssue], path: str = "chain") -> PlanChain | None:
    """Validate a plan chain document; ``None`` when any error was found."""
    c = _Collector(issues)
    if not isinstance(doc, dict):
        c.error(path, "expected an object")
        return None
    raw_steps = _as_list(c, doc, "steps", path)
    if "steps" in doc and isinstance(doc["steps"], list) and not raw_steps:
        c.error(f"{path}.steps", "chain has no steps")
    steps = []
    for i, raw in enumerate(raw_steps):
        p = f"{path}.steps[{i}]"
        if not isinstance(raw, dict):
            c.error(p, "expected an object")
            continue
        lm = c.text(raw, "lm", p, required=False)
        sem = c.text(raw, "sem", p, required=lm is None)
        d = c.enum(raw, "dir", p, DirBin)
        dist = c.number(raw, "dist", p, minimum=0.0)
        h = c.enum(raw, "h", p, VerticalRel, required=False, default=VerticalRel.SAME)
        box = c.bbox(raw, "bbox", p, required=False)
        if d is None or dist is None or h is None or (lm is None and sem is None):
            continue
        steps.append(PlanStep(lm, normalize_label(sem) if sem else "", RelationDescriptor(d, h, dist), box))

    goal = None
    if doc.get("goal") is not None:
        g = doc["goal"]
        ok = (
            isinstance(g, list)
            and len(g) == 2
            and all(not isinstance(v, bool) and isinstance(v, (int, float)) and math.isfinite(float(v)) for v in g)
        )
        if ok:
            goal = (float(g[0]), float(g[1]))
        else:
            c.error(f"{path}.goal", "expected [x, z]")
    if c.failed:
        return None
    return PlanChain(tuple(steps), goal)


# -- decoding --------------------------------------------------------------


def resolve_landmark(cmap: CognitiveMap, step: PlanStep) -> Landmark:
    """Look up a step's landmark by exact id, else by unique semantic label.

    Raises:
        UnknownLandmark: neither id nor semantic resolves.
        AmbiguousSemantic: the semantic label matches several landmarks.
    """
    if step.lm is not None:
        for lm in cmap.landmarks:
            if lm.id == step.lm:
                return lm
    sem = normalize_label(step.sem) if step.sem else ""
    matches = [lm for lm in cmap.landmarks if sem and normalize_label(lm.semantic) == sem]
    if len(matches) == 1:
        return matches[0]
    if len(matches) > 1:
        raise AmbiguousSemantic(f"semantic {sem!r} matches {len(matches)} landmarks", "sem")
    raise UnknownLandmark(f"landmark {step.lm!r} / {sem!r} not in map", "lm")


def offset_point(center: tuple[float, float], direction: DirBin, dist: float) -> tuple[float, float]:
    ux, uz = direction.unit()
    return (center[0] + dist * ux, center[1] + dist * uz)


def encode_relation(center: tuple[float, float], point: tuple[float, float]) -> tuple[DirBin, float]:
    """Bearing bin and distance of ``point`` seen from ``center``."""
    dx, dz = point[0] - center[0], point[1] - center[1]
    dist = math.hypot(dx, dz)
    return (bearing_bin(dx, dz) if dist > 0 else DirBin.N), dist


def quantization_error(center: tuple[float, float], point: tuple[float, float]) -> float:
    """Distance between ``point`` and its decode after encoding relative to ``center``."""
    d, dist = encode_relation(center, point)
    return math.dist(offset_point(center, d, dist), point)


def decode_step(cmap: CognitiveMap, step: PlanStep, y: float = 0.8) -> WorldPoint:
    """Landmark centre displaced by ``dist`` along the bin-centre bearing."""
    lm = resolve_landmark(cmap, step)
    x, z = offset_point(lm.center, step.rel.dir, step.rel.dist)
    return WorldPoint(x, y, z)


def decode_chain(
    cmap: CognitiveMap,
    chain: PlanChain,
    *,
    use_goal: bool = True,
    y: float = 0.8,
) -> tuple[list[WorldPoint], list[ParseIssue]]:
    """Decode each step in order, skipping (and reporting) unresolvable ones.

    With ``use_goal`` the declared goal, when present, replaces the final
    decoded waypoint.

    Raises:
        EmptyDecodedChain: no step could be decoded.
    """
    waypoints: list[WorldPoint] = []
    issues: list[ParseIssue] = []
    for i, step in enumerate(chain.steps):
        try:
            waypoints.append(decode_step(cmap, step, y))
        except (UnknownLandmark, AmbiguousSemantic) as exc:
            issues.append(ParseIssue("error", f"chain.steps[{i}].{exc.path}", exc.message))
    if not waypoints:
        raise EmptyDecodedChain("no step of the chain could be decoded", "chain.steps")
    if use_goal and chain.goal is not None:
        waypoints[-1] = WorldPoint(chain.goal[0], y, chain.goal[1])
    return waypoints, issues


def map_from_chain(chain: PlanChain) -> CognitiveMap:
    """Landmark-only map recovered from the boxes carried by chain steps."""
    landmarks: dict[str, Landmark] = {}
    for i, step in enumerate(chain.steps):
        if step.bbox is None:
            continue
        key = step.lm if step.lm is not None else f"{step.sem}#{i}"
        landmarks.setdefault(key, Landmark(key, step.sem, step.bbox))
    lms = tuple(landmarks.values())
    return CognitiveMap((Region("region_0", tuple(landmarks)),) if lms else (), lms, ())


def spacing_ok(points: Sequence[tuple[float, float]], min_step: float) -> bool:
    return all(math.dist(a, b) >= min_step for a, b in zip(points, points[1:]))
