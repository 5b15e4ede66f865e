"""Fast pre-screening for rotation and scale invariant template matching.

Two-stage pipeline: constant-time octagonal-star features over square
and diagonal integral tables rule out image regions that cannot contain
the template at any rotation or covered scale; the survivors go to an
exact NCC matcher. See README.md for the full tour.
"""

from .features import (
    MIN_RING_HALF_SIZE,
    OctagonFeatures,
    RingBand,
    RingFeatureVector,
    ShapeFeatures,
    default_star_radius,
    diamond_features,
    octagon_features,
    patch_center_margins,
    ring_feature_maps,
    ring_features,
    ring_plan,
    square_features,
)
from .image_io import (
    PgmError,
    crop_center,
    load_pgm,
    resize_bilinear,
    rotate,
    save_pgm,
    std_dev,
)
from .integral import (
    IntegralTables,
    Rsat,
    Sat,
    WeightKind,
    build_rsat,
    build_sat,
    build_tables,
    diamond_pixel_count,
    diamond_region_sum,
    square_region_sum,
)
from .screening import (
    FeatureSet,
    FlatTemplateError,
    PruneStats,
    Quantizer,
    ScreeningConfig,
    ScreeningResult,
    build_feature_set,
    ladder_sizes,
    prune_stats,
    quantize,
    screen,
)
from .second_stage import MatchResult, full_search_ncc, match_candidates, ncc_score
from .synth_bench import (
    BenchReport,
    CaseGenerationError,
    GroundTruth,
    extract_rotated_square,
    make_case,
    make_framed_box,
    make_textured_scene,
    overlap_preserved,
    run_benchmark,
)

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "CaseGenerationError",
    "FeatureSet",
    "FlatTemplateError",
    "GroundTruth",
    "IntegralTables",
    "MIN_RING_HALF_SIZE",
    "MatchResult",
    "OctagonFeatures",
    "PgmError",
    "PruneStats",
    "Quantizer",
    "RingBand",
    "RingFeatureVector",
    "Rsat",
    "Sat",
    "ScreeningConfig",
    "ScreeningResult",
    "ShapeFeatures",
    "WeightKind",
    "build_feature_set",
    "build_rsat",
    "build_sat",
    "build_tables",
    "crop_center",
    "default_star_radius",
    "diamond_features",
    "diamond_pixel_count",
    "diamond_region_sum",
    "extract_rotated_square",
    "full_search_ncc",
    "ladder_sizes",
    "load_pgm",
    "make_case",
    "make_framed_box",
    "make_textured_scene",
    "match_candidates",
    "ncc_score",
    "octagon_features",
    "overlap_preserved",
    "patch_center_margins",
    "prune_stats",
    "quantize",
    "resize_bilinear",
    "ring_feature_maps",
    "ring_features",
    "ring_plan",
    "rotate",
    "run_benchmark",
    "save_pgm",
    "screen",
    "square_features",
    "square_region_sum",
    "std_dev",
]
