"""Run configuration: every pipeline tunable in one validated document."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from ._validation import check_int, check_keys, check_list, check_number, check_positive, check_str
from .cogmap import DEFAULT_EXCLUSIONS
from .errors import ConfigError
from .evaluation import EvalConfig
from .tasks import ChainConfig, TaskConfig


@dataclass(frozen=True)
class RunConfig:
    """Defaults reproduce the bundled fixtures and test suite.

    ``resolution`` pins the expected grid cell size; ``None`` accepts any.
    ``band`` fixes the CogRS interval; ``None`` derives it from the
    ``band_percentiles`` of the corpus.
    """

    # cognitive map
    exclusion_list: tuple[str, ...] = DEFAULT_EXCLUSIONS
    max_landmarks: int = 20
    r0: float = 2.0
    growth: float = 1.5
    eps_on: float = 0.05
    n_regions: int | str = "auto"
    kmeans_n_init: int = 50
    # grid and chains
    resolution: float | None = None
    step: float = 0.25
    corridor: float = 1.5
    long_seg: float = 3.0
    min_step: float = 0.5
    agent_height: float = 0.8
    approach_radius: float = 1.0
    max_tries: int = 50
    max_length: float = 48.0
    # evaluation
    iou_thresh: float = 0.25
    snap_radius: float = 0.5
    success_distance: float = 1.0
    # CogRS
    band: tuple[float, float] | None = None
    band_percentiles: tuple[float, float] = (40.0, 90.0)

    def __post_init__(self):
        _validate(self)

    @classmethod
    def from_dict(cls, doc: Any) -> "RunConfig":
        names = tuple(f.name for f in fields(cls))
        check_keys(doc, "", (), names, exc=ConfigError)
        kw = dict(doc)
        for key in ("exclusion_list", "band", "band_percentiles"):
            if kw.get(key) is not None:
                kw[key] = tuple(check_list(kw[key], key, exc=ConfigError))
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        """Read a JSON config file. ``OSError`` propagates for I/O failures."""
        text = Path(path).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})", str(path)) from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for key in ("exclusion_list", "band", "band_percentiles"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    def builder_params(self, random_state: int) -> dict[str, Any]:
        return dict(
            exclusion_list=self.exclusion_list,
            max_landmarks=self.max_landmarks,
            r0=self.r0,
            growth=self.growth,
            eps_on=self.eps_on,
            n_regions=self.n_regions,
            n_init=self.kmeans_n_init,
            random_state=random_state,
        )

    def chain_config(self) -> ChainConfig:
        return ChainConfig(self.corridor, self.long_seg, self.min_step, self.step, self.agent_height)

    def task_config(self) -> TaskConfig:
        return TaskConfig(self.chain_config(), self.approach_radius, self.max_tries, self.max_length)

    def eval_config(self) -> EvalConfig:
        return EvalConfig(self.iou_thresh, self.snap_radius, self.success_distance, self.agent_height)


def _validate(c: RunConfig) -> None:
    ex = dict(exc=ConfigError)
    if not isinstance(c.exclusion_list, tuple):
        raise ConfigError("expected a list of labels", "exclusion_list")
    for i, label in enumerate(c.exclusion_list):
        check_str(label, f"exclusion_list[{i}]", **ex)
    check_int(c.max_landmarks, "max_landmarks", minimum=1, **ex)
    check_int(c.kmeans_n_init, "kmeans_n_init", minimum=1, **ex)
    check_int(c.max_tries, "max_tries", minimum=1, **ex)
    for name in ("r0", "step", "corridor", "long_seg", "min_step", "approach_radius", "max_length", "snap_radius", "success_distance"):
        check_positive(getattr(c, name), name, **ex)
    if check_number(c.growth, "growth", **ex) <= 1:
        raise ConfigError("radius growth factor must exceed 1", "growth")
    if check_number(c.eps_on, "eps_on", **ex) < 0:
        raise ConfigError("expected a non-negative tolerance", "eps_on")
    check_number(c.agent_height, "agent_height", **ex)
    if not 0 < check_number(c.iou_thresh, "iou_thresh", **ex) <= 1:
        raise ConfigError("expected a threshold in (0, 1]", "iou_thresh")
    if c.n_regions != "auto":
        check_int(c.n_regions, "n_regions", minimum=1, **ex)
    if c.resolution is not None:
        check_positive(c.resolution, "resolution", **ex)
    if c.band is not None:
        if len(c.band) != 2:
            raise ConfigError("expected [tau_min, tau_max]", "band")
        lo, hi = (check_positive(v, f"band[{i}]", **ex) for i, v in enumerate(c.band))
        if not lo < hi:
            raise ConfigError("need tau_min < tau_max", "band")
    if len(c.band_percentiles) != 2:
        raise ConfigError("expected [lower, upper]", "band_percentiles")
    lo, hi = (check_number(v, f"band_percentiles[{i}]", **ex) for i, v in enumerate(c.band_percentiles))
    if not 0 <= lo < hi <= 100:
        raise ConfigError("need 0 <= lower < upper <= 100", "band_percentiles")
