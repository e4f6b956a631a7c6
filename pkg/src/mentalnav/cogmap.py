"""Hierarchical cognitive map synthesis: regions, landmarks and objects.

Building a map runs three steps over a scene annotation:

1. landmark selection - drop background categories, rank the rest by
   ground footprint area and keep the largest;
2. object attachment - link every remaining object to its nearest landmark
   with a ``(dir, h, dist)`` relation measured from the landmark;
3. region clustering - spectral clustering of landmark centres.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import round_sig
from .errors import EmptySelection, ZeroVector
from .scene import Box2D, Box3D, ObjectInstance, SceneAnnotation
from .spectral import SpectralRegionClusterer, gaussian_affinity

DEFAULT_EXCLUSIONS = ("floor", "carpet", "rug", "ceiling", "wall", "door frame")


class DirBin(str, Enum):
    """Eight 45 deg compass bins; N is azimuth 0 (+Z) and E is 90 (+X)."""

    N = "N"
    NE = "NE"
    E = "E"
    SE = "SE"
    S = "S"
    SW = "SW"
    W = "W"
    NW = "NW"

    @property
    def index(self) -> int:
        return _DIR_ORDER.index(self)

    @property
    def azimuth(self) -> float:
        return 45.0 * self.index

    def unit(self) -> tuple[float, float]:
        """Unit ``(x, z)`` vector of the bin centre."""
        return _UNIT[self.index]

    def rotated(self, steps: int) -> DirBin:
        """Bin ``steps`` * 45 deg clockwise from this one."""
        return _DIR_ORDER[(self.index + steps) % 8]


_DIR_ORDER = tuple(DirBin)
_H = math.sqrt(0.5)
# Exact unit vectors so axis bins carry no sin/cos round-off.
_UNIT = ((0.0, 1.0), (_H, _H), (1.0, 0.0), (_H, -_H), (0.0, -1.0), (-_H, -_H), (-1.0, 0.0), (-_H, _H))


class VerticalRel(str, Enum):
    SAME = "same"
    ON = "on"


def azimuth(dx: float, dz: float) -> float:
    """Degrees in [0, 360), 0 along +Z and 90 along +X."""
    return math.degrees(math.atan2(dx, dz)) % 360.0


def bin_of_azimuth(theta: float) -> DirBin:
    """Nearest bin centre; edges (odd multiples of 22.5) go to the larger azimuth."""
    # Rounding absorbs atan2 noise so a bearing built from an exact edge angle stays on the edge.
    theta = round(theta % 360.0, 9)
    return _DIR_ORDER[int(math.floor((theta + 22.5) / 45.0)) % 8]


def bearing_bin(dx: float, dz: float) -> DirBin:
    """Compass bin of the ground displacement ``(dx, dz)``.

    Raises:
        ZeroVector: for ``(0, 0)``.
    """
    if dx == 0 and dz == 0:
        raise ZeroVector("bearing of a zero displacement is undefined")
    return bin_of_azimuth(azimuth(dx, dz))


def vertical_relation(obj: Box3D, lm: Box3D, eps: float = 0.05) -> VerticalRel:
    """``on`` when the object rests on the landmark's top with overlapping footprints."""
    fo = Box2D(obj.x_min, obj.x_max, obj.z_min, obj.z_max)
    fl = Box2D(lm.x_min, lm.x_max, lm.z_min, lm.z_max)
    if abs(obj.y_min - lm.y_max) <= eps and fo.intersection_area(fl) > 0:
        return VerticalRel.ON
    return VerticalRel.SAME


@dataclass(frozen=True)
class RelationDescriptor:
    dir: DirBin
    h: VerticalRel
    dist: float


@dataclass(frozen=True)
class Landmark:
    id: str
    semantic: str
    bbox: Box2D
    source_object: str | None = None
    box3d: Box3D | None = field(default=None, compare=False, repr=False)

    @property
    def center(self) -> tuple[float, float]:
        return self.bbox.center


@dataclass(frozen=True)
class ObjectAttachment:
    object_id: str
    semantic: str
    anchor_landmark_id: str
    relation: RelationDescriptor


@dataclass(frozen=True)
class Region:
    id: str
    landmark_ids: tuple[str, ...]
    label: str | None = None


@dataclass(frozen=True)
class CognitiveMap:
    regions: tuple[Region, ...]
    landmarks: tuple[Landmark, ...]
    attachments: tuple[ObjectAttachment, ...] = ()

    def landmark(self, landmark_id: str) -> Landmark:
        for lm in self.landmarks:
            if lm.id == landmark_id:
                return lm
        raise KeyError(landmark_id)

    def landmark_ids(self) -> list[str]:
        return [lm.id for lm in self.landmarks]

    def check_invariants(self) -> list[str]:
        """Return human-readable violations of the map's structural invariants."""
        problems = []
        ids = self.landmark_ids()
        if len(set(ids)) != len(ids):
            problems.append("duplicate landmark ids")
        covered: list[str] = []
        for region in self.regions:
            if not region.landmark_ids:
                problems.append(f"region {region.id} is empty")
            covered.extend(region.landmark_ids)
        if sorted(covered) != sorted(ids):
            problems.append("regions do not partition the landmark set")
        id_set = set(ids)
        for att in self.attachments:
            if att.anchor_landmark_id not in id_set:
                problems.append(f"object {att.object_id} anchors unknown landmark {att.anchor_landmark_id}")
            if att.object_id in id_set:
                problems.append(f"object {att.object_id} is also a landmark")
        return problems

    def to_dict(self) -> dict[str, Any]:
        return {
            "regions": [
                {"id": r.id, "landmarks": list(r.landmark_ids), **({"label": r.label} if r.label else {})}
                for r in self.regions
            ],
            "landmarks": [
                {"id": lm.id, "semantic": lm.semantic, "bbox": [round_sig(v) for v in lm.bbox.as_list()]}
                for lm in self.landmarks
            ],
            "objects": [
                {
                    "id": a.object_id,
                    "semantic": a.semantic,
                    "anchor": a.anchor_landmark_id,
                    "dir": a.relation.dir.value,
                    "h": a.relation.h.value,
                    "dist": round_sig(a.relation.dist),
                }
                for a in self.attachments
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


# -- step 1 ----------------------------------------------------------------


def _is_background(semantic: str, exclusions: Iterable[str]) -> bool:
    norm = " ".join(semantic.lower().split())
    return norm in {" ".join(e.lower().split()) for e in exclusions}


def select_landmarks(
    scene: SceneAnnotation,
    exclusion_list: Sequence[str] = DEFAULT_EXCLUSIONS,
    max_landmarks: int = 20,
) -> list[Landmark]:
    """Largest non-background footprints, area descending then id ascending.

    Raises:
        EmptySelection: every object is background.
    """
    candidates = [o for o in scene.objects if not _is_background(o.semantic, exclusion_list)]
    if not candidates:
        raise EmptySelection(f"scene {scene.scene_id!r} has no non-background object", "objects")
    candidates.sort(key=lambda o: (-o.footprint.area, o.id))
    return [
        Landmark(o.id, o.semantic, o.footprint, source_object=o.id, box3d=o.box)
        for o in candidates[:max_landmarks]
    ]


# -- step 2 ----------------------------------------------------------------


def relation_between(anchor: Landmark, obj: ObjectInstance, eps_on: float = 0.05) -> RelationDescriptor:
    """Relation of ``obj`` as seen from ``anchor`` (direction landmark -> object)."""
    lx, lz = anchor.center
    ox, oz = obj.footprint.center
    dx, dz = ox - lx, oz - lz
    dist = math.hypot(dx, dz)
    # A centred object has no bearing; N is the convention.
    direction = bearing_bin(dx, dz) if dist > 0 else DirBin.N
    lm_box = anchor.box3d or Box3D(anchor.bbox.x_min, anchor.bbox.x_max, 0.0, 0.0, anchor.bbox.z_min, anchor.bbox.z_max)
    return RelationDescriptor(direction, vertical_relation(obj.box, lm_box, eps_on), dist)


def nearest_landmark(
    point: tuple[float, float],
    landmarks: Sequence[Landmark],
    radius: float = math.inf,
) -> tuple[Landmark, float] | None:
    """Nearest landmark centre within ``radius``; ties by landmark id."""
    best = None
    for lm in landmarks:
        d = math.dist(point, lm.center)
        if d <= radius and (best is None or (d, lm.id) < (best[1], best[0].id)):
            best = (lm, d)
    return best


def assign_objects(
    scene: SceneAnnotation,
    landmarks: Sequence[Landmark],
    exclusion_list: Sequence[str] = DEFAULT_EXCLUSIONS,
    r0: float = 2.0,
    growth: float = 1.5,
    eps_on: float = 0.05,
) -> list[ObjectAttachment]:
    """Attach every non-background, non-landmark object to a landmark.

    The search radius starts at ``r0`` and grows geometrically until a
    landmark falls inside it. Past the scene diameter the nearest landmark
    overall is taken, so assignment always succeeds.
    """
    if not landmarks:
        raise ValueError("landmarks must be non-empty")
    if r0 <= 0 or growth <= 1:
        raise ValueError("need r0 > 0 and growth > 1")
    lm_ids = {lm.id for lm in landmarks}
    cap = scene.grid.diameter()
    out = []
    for obj in scene.objects:
        if obj.id in lm_ids or _is_background(obj.semantic, exclusion_list):
            continue
        center = obj.footprint.center
        radius = r0
        hit = nearest_landmark(center, landmarks, radius)
        while hit is None and radius < cap:
            radius *= growth
            hit = nearest_landmark(center, landmarks, radius)
        if hit is None:
            hit = nearest_landmark(center, landmarks)
        anchor = hit[0]
        out.append(ObjectAttachment(obj.id, obj.semantic, anchor.id, relation_between(anchor, obj, eps_on)))
    return out


# -- step 3 ----------------------------------------------------------------


def affinity_matrix(landmarks: Sequence[Landmark]) -> np.ndarray:
    """Gaussian affinity of landmark centres (bandwidth: median non-zero distance)."""
    if len(landmarks) < 2:
        raise ValueError("need at least two landmarks")
    return gaussian_affinity(np.array([lm.center for lm in landmarks]))[0]


def cluster_regions(
    landmarks: Sequence[Landmark],
    k: int | str = "auto",
    random_state: int = 0,
    n_init: int = 50,
) -> list[Region]:
    """Partition landmarks into regions by spectral clustering.

    Regions are numbered by their first landmark in ``landmarks`` order; a
    single landmark forms a single region.
    """
    if len(landmarks) == 1:
        if k not in ("auto", 1):
            raise ValueError("k must be 1 for a single landmark")
        return [Region("region_0", (landmarks[0].id,))]
    centers = np.array([lm.center for lm in landmarks])
    labels = SpectralRegionClusterer(n_clusters=k, n_init=n_init, random_state=random_state).fit_predict(centers)
    groups: dict[int, list[str]] = {}
    for lm, lab in zip(landmarks, labels):
        groups.setdefault(int(lab), []).append(lm.id)
    return [Region(f"region_{i}", tuple(ids)) for i, ids in enumerate(groups.values())]


# -- composition -----------------------------------------------------------


class CognitiveMapBuilder(TransformerMixin, BaseEstimator):
    """Scene annotation -> cognitive map transformer.

    The builder has nothing to learn; ``fit`` only validates parameters.
    ``transform`` maps a sequence of scenes to a list of maps.
    """

    def __init__(
        self,
        exclusion_list=DEFAULT_EXCLUSIONS,
        max_landmarks=20,
        r0=2.0,
        growth=1.5,
        eps_on=0.05,
        n_regions="auto",
        random_state=0,
        n_init=50,
    ):
        self.exclusion_list = exclusion_list
        self.max_landmarks = max_landmarks
        self.r0 = r0
        self.growth = growth
        self.eps_on = eps_on
        self.n_regions = n_regions
        self.random_state = random_state
        self.n_init = n_init

    def _validate_params(self) -> None:
        if not isinstance(self.max_landmarks, int) or self.max_landmarks < 1:
            raise ValueError("max_landmarks must be a positive integer")
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if not self.growth > 1:
            raise ValueError("growth must exceed 1")
        if not self.eps_on >= 0:
            raise ValueError("eps_on must be non-negative")
        if self.n_regions != "auto" and not (isinstance(self.n_regions, int) and self.n_regions >= 1):
            raise ValueError("n_regions must be 'auto' or a positive integer")

    def fit(self, X=None, y=None):
        self._validate_params()
        self.is_fitted_ = True
        return self

    def build(self, scene: SceneAnnotation) -> CognitiveMap:
        self._validate_params()
        landmarks = select_landmarks(scene, self.exclusion_list, self.max_landmarks)
        attachments = assign_objects(scene, landmarks, self.exclusion_list, self.r0, self.growth, self.eps_on)
        k = self.n_regions
        if k != "auto":
            k = min(k, len(landmarks))
        regions = cluster_regions(landmarks, k, self.random_state, self.n_init)
        return CognitiveMap(tuple(regions), tuple(landmarks), tuple(attachments))

    def transform(self, X):
        if isinstance(X, SceneAnnotation):
            X = [X]
        return [self.build(scene) for scene in X]


def build_cognitive_map(scene: SceneAnnotation, **params: Any) -> CognitiveMap:
    """Build the map of one scene; keyword arguments are ``CognitiveMapBuilder`` params."""
    return CognitiveMapBuilder(**params).build(scene)
