"""Six-metric evaluation harness: pure reducers plus backend orchestration."""

from .evaluate import (
    METRIC_FIELDS,
    MetricBackends,
    MetricReport,
    MetricRow,
    REPORT_SCHEMA,
    build_report,
    compute_aggregate,
    deserialize_report,
    evaluate_video,
    serialize_report,
)
from .reducers import (
    DimensionMismatch,
    EmptyInput,
    FacelessFramePolicy,
    FlowPooling,
    Interpolator,
    MetricConfig,
    MetricError,
    NoFacesInVideo,
    TooFewFrames,
    arc_sim,
    dynamic_degree_set,
    dynamic_degree_video,
    frame_score_mean,
    motion_smoothness,
    overall_consistency,
)

__all__ = [
    "DimensionMismatch",
    "EmptyInput",
    "FacelessFramePolicy",
    "FlowPooling",
    "Interpolator",
    "METRIC_FIELDS",
    "MetricBackends",
    "MetricConfig",
    "MetricError",
    "MetricReport",
    "MetricRow",
    "NoFacesInVideo",
    "REPORT_SCHEMA",
    "TooFewFrames",
    "arc_sim",
    "build_report",
    "compute_aggregate",
    "deserialize_report",
    "dynamic_degree_set",
    "dynamic_degree_video",
    "evaluate_video",
    "frame_score_mean",
    "motion_smoothness",
    "overall_consistency",
    "serialize_report",
]
