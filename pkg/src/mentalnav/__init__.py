"""Cognitive maps, landmark-grounded navigation tasks and plan evaluation on occupancy grids."""

from .codec import ModelOutput, PlanChain, PlanStep, decode_chain, decode_step, parse_model_output, serialize_output
from .cogmap import CognitiveMap, CognitiveMapBuilder, DirBin, Landmark, Region, bearing_bin, build_cognitive_map
from .cogrs import CogRSFilter, PerplexityBand, TokenLogProbRecord, filter_band, span_perplexity
from .config import RunConfig
from .evaluation import (
    BenchmarkReport,
    InstanceReport,
    aggregate,
    evaluate_instance,
    execute_plan,
    landmark_f1,
    landmark_miou,
    navigation_error,
    ne_waypoint,
    spl,
)
from .planner import geodesic_distance, shortest_path, snap_to_navigable
from .scene import Box2D, Box3D, OccupancyGrid, SceneAnnotation, WorldPoint, parse_scene, serialize_scene
from .spectral import SpectralRegionClusterer
from .synth import load_fixture
from .tasks import NavTask, Stratum, generate_tasks, stratum_of

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "Box2D",
    "Box3D",
    "CogRSFilter",
    "CognitiveMap",
    "CognitiveMapBuilder",
    "DirBin",
    "InstanceReport",
    "Landmark",
    "ModelOutput",
    "NavTask",
    "OccupancyGrid",
    "PerplexityBand",
    "PlanChain",
    "PlanStep",
    "Region",
    "RunConfig",
    "SceneAnnotation",
    "SpectralRegionClusterer",
    "Stratum",
    "TokenLogProbRecord",
    "WorldPoint",
    "aggregate",
    "bearing_bin",
    "build_cognitive_map",
    "decode_chain",
    "decode_step",
    "evaluate_instance",
    "execute_plan",
    "filter_band",
    "generate_tasks",
    "geodesic_distance",
    "landmark_f1",
    "landmark_miou",
    "load_fixture",
    "navigation_error",
    "ne_waypoint",
    "parse_model_output",
    "parse_scene",
    "serialize_output",
    "serialize_scene",
    "shortest_path",
    "snap_to_navigable",
    "span_perplexity",
    "spl",
    "stratum_of",
]
