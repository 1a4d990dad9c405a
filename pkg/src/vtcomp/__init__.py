"""Attention-guided token compression for video sequences.

Operates on dumps of per-segment attention scores and token embeddings:
selects the highest-attention token per spatial grid cell of every
frame, merges the per-segment survivors in temporal order, optionally
appends an average-pooled summary, and reports how selections distribute
across frames.
"""

from .bias import (
    BiasReport,
    HeatmapAggregate,
    aggregate_heatmap,
    grid_selection_concentration,
    heatmap_csv,
    heatmap_payload,
    mean_report_payload,
    report_payload,
    tail_concentration,
)
from .errors import (
    ConfigError,
    DumpError,
    MagicError,
    NegativeAttentionError,
    NonFiniteError,
    ReservedFlagError,
    ShapeError,
    TruncatedPayloadError,
    VersionError,
)
from .model import (
    Accounting,
    GridShape,
    PipelineConfig,
    Placement,
    SummaryShape,
    TokenDump,
    TokenIndex,
    derive_accounting,
)
from .pipeline import (
    FinalSequence,
    FinalToken,
    read_sequence,
    run_pipeline,
    run_pipeline_parallel,
    sequence_to_bytes,
    write_sequence,
)
from .provider import (
    CALIBRATED_BIAS_SHARPNESS,
    CALIBRATED_BIAS_STRENGTH,
    SyntheticBiasParams,
    calibrate_bias_strength,
    dump_from_bytes,
    dump_to_bytes,
    load_dump,
    spread_seeds,
    synthesize,
    synthesize_attention,
    write_dump,
)
from .selection import (
    CompressedSegment,
    Selection,
    TokenSelection,
    gapool_compress,
    global_topk,
    topk_flat_indices,
)
from .summary import SummarySequence, SummaryToken, vstail_pool

__version__ = "0.1.0"

__all__ = [
    "Accounting",
    "BiasReport",
    "CALIBRATED_BIAS_SHARPNESS",
    "CALIBRATED_BIAS_STRENGTH",
    "CompressedSegment",
    "ConfigError",
    "DumpError",
    "FinalSequence",
    "FinalToken",
    "GridShape",
    "HeatmapAggregate",
    "MagicError",
    "NegativeAttentionError",
    "NonFiniteError",
    "PipelineConfig",
    "Placement",
    "ReservedFlagError",
    "Selection",
    "ShapeError",
    "SummarySequence",
    "SummaryShape",
    "SummaryToken",
    "SyntheticBiasParams",
    "TokenDump",
    "TokenIndex",
    "TokenSelection",
    "TruncatedPayloadError",
    "VersionError",
    "aggregate_heatmap",
    "calibrate_bias_strength",
    "derive_accounting",
    "dump_from_bytes",
    "dump_to_bytes",
    "gapool_compress",
    "global_topk",
    "grid_selection_concentration",
    "heatmap_csv",
    "heatmap_payload",
    "load_dump",
    "mean_report_payload",
    "read_sequence",
    "report_payload",
    "run_pipeline",
    "run_pipeline_parallel",
    "sequence_to_bytes",
    "spread_seeds",
    "synthesize",
    "synthesize_attention",
    "tail_concentration",
    "topk_flat_indices",
    "vstail_pool",
    "write_dump",
    "write_sequence",
]
