"""Spatial statistics over software execution traces.

Turns method entry/exit logs into a software space dataset (a symmetric
proximity matrix over executed modules plus their execution counts), computes
global and local spatial autocorrelation with significance tests, and exports
colored dependency graphs, scatter data, and reports.
"""

from .errors import (
    DegenerateVariance,
    EmptySpace,
    EmptyWeights,
    IoFailure,
    MalformedRecord,
    NonpositiveM,
    SoftspaceError,
    SynthError,
    TooFewZones,
    UnknownModule,
    ZeroVariance,
)
from .space_model import (
    SoftwareSpaceDataset,
    SpatialWeights,
    WeightsMode,
    build_dataset,
    build_weights,
    row_standardize,
)
from .spatial_stats import (
    ClusterLabel,
    GlobalMoranResult,
    InferenceMethod,
    LocalMoranRecord,
    LocalMoranTerm,
    MMode,
    analytic_moments,
    classify_clusters,
    global_moran,
    local_moran,
    permutation_test,
    two_sided_p,
    z_score,
)
from .trace_ingest import (
    CallEdge,
    EventKind,
    FieldMap,
    IngestSummary,
    Strictness,
    TraceEvent,
    daily_series,
    parse_log,
    reconstruct_calls,
)
from .viz_export import (
    AnalysisReport,
    ColorScheme,
    build_report,
    export_dot,
    export_graphml,
    export_report,
    export_timeseries,
    moran_scatter,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "CallEdge",
    "ClusterLabel",
    "ColorScheme",
    "DegenerateVariance",
    "EmptySpace",
    "EmptyWeights",
    "EventKind",
    "FieldMap",
    "GlobalMoranResult",
    "InferenceMethod",
    "IngestSummary",
    "IoFailure",
    "LocalMoranRecord",
    "LocalMoranTerm",
    "MMode",
    "MalformedRecord",
    "NonpositiveM",
    "SoftspaceError",
    "SoftwareSpaceDataset",
    "SpatialWeights",
    "Strictness",
    "SynthError",
    "TooFewZones",
    "TraceEvent",
    "UnknownModule",
    "WeightsMode",
    "ZeroVariance",
    "analytic_moments",
    "build_dataset",
    "build_report",
    "build_weights",
    "classify_clusters",
    "daily_series",
    "export_dot",
    "export_graphml",
    "export_report",
    "export_timeseries",
    "global_moran",
    "local_moran",
    "moran_scatter",
    "parse_log",
    "permutation_test",
    "reconstruct_calls",
    "row_standardize",
    "two_sided_p",
    "z_score",
]
