"""Core data model: shapes, pipeline configuration, token dumps, accounting.

All indices are 0-based everywhere, including persisted formats and
reports. Flat token position is frame-major, row-major raster:
``frame * H * W + row * W + col``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    ConfigError,
    NegativeAttentionError,
    NonFiniteError,
    ShapeError,
)


@dataclass(frozen=True)
class GridShape:
    """Height x width pair used for frames, selection grids and pool kernels."""

    height: int
    width: int

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ConfigError(f"shape must be positive, got {self.height}x{self.width}")

    @property
    def area(self) -> int:
        return self.height * self.width

    def __str__(self) -> str:
        return f"{self.height}x{self.width}"


class Placement(str, Enum):
    """Where the summary tokens go in the final sequence."""

    NONE = "none"
    HEAD = "head"
    TAIL = "tail"


@dataclass(frozen=True)
class PipelineConfig:
    """All pipeline hyper-parameters.

    A video is sampled into ``segments * segment_len`` frames of
    ``frame_shape`` tokens each. Every frame is tiled by ``grid``-sized
    cells; one token per cell survives compression. The number of
    segments equals the grid area, so compression and temporal expansion
    cancel and the compressed token count is independent of the grid.

    ``pool`` enables the summary tail: compressed frames (at grid
    resolution) are average-pooled with this kernel. ``attn_layer`` is
    metadata only (which decoder layer produced the attention scores);
    it is echoed into reports, never used in computation.
    """

    segment_len: int
    grid: GridShape
    embed_dim: int
    frame_shape: GridShape = GridShape(24, 24)
    pool: GridShape | None = None
    summary_placement: Placement = Placement.NONE
    attn_layer: int = 3

    def __post_init__(self) -> None:
        if self.segment_len < 1:
            raise ConfigError(f"segment_len must be >= 1, got {self.segment_len}")
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.attn_layer < 1:
            raise ConfigError(f"attn_layer must be >= 1, got {self.attn_layer}")
        if self.frame_shape.height % self.grid.height != 0:
            raise ConfigError(
                f"frame height {self.frame_shape.height} not divisible by "
                f"grid height {self.grid.height}"
            )
        if self.frame_shape.width % self.grid.width != 0:
            raise ConfigError(
                f"frame width {self.frame_shape.width} not divisible by "
                f"grid width {self.grid.width}"
            )
        if self.pool is not None:
            if self.grid_rows % self.pool.height != 0:
                raise ConfigError(
                    f"grid rows {self.grid_rows} not divisible by "
                    f"pool height {self.pool.height}"
                )
            if self.grid_cols % self.pool.width != 0:
                raise ConfigError(
                    f"grid cols {self.grid_cols} not divisible by "
                    f"pool width {self.pool.width}"
                )
            if self.summary_placement is Placement.NONE:
                raise ConfigError(
                    "pool configured but summary_placement is 'none'; "
                    "choose 'head' or 'tail' or drop the pool"
                )
        elif self.summary_placement is not Placement.NONE:
            raise ConfigError(
                f"summary_placement '{self.summary_placement.value}' requires a pool"
            )

    # Derived dimensions. Names follow the raster layout: a frame of
    # H x W tokens is tiled into grid_rows x grid_cols cells of
    # grid.height x grid.width tokens each.

    @property
    def segments(self) -> int:
        """Number of segments; equals the grid area (compression factor)."""
        return self.grid.area

    @property
    def tokens_per_frame(self) -> int:
        return self.frame_shape.area

    @property
    def tokens_per_segment(self) -> int:
        return self.segment_len * self.frame_shape.area

    @property
    def grid_rows(self) -> int:
        return self.frame_shape.height // self.grid.height

    @property
    def grid_cols(self) -> int:
        return self.frame_shape.width // self.grid.width

    @property
    def cells_per_frame(self) -> int:
        """Grid cells per frame; tokens each frame keeps after compression."""
        return self.grid_rows * self.grid_cols

    @property
    def total_frames(self) -> int:
        return self.segments * self.segment_len

    @property
    def summary_shape(self) -> SummaryShape | None:
        if self.pool is None:
            return None
        return SummaryShape(
            frame_summary=GridShape(
                self.grid_rows // self.pool.height,
                self.grid_cols // self.pool.width,
            ),
            receptive_field=GridShape(
                self.grid.height * self.pool.height,
                self.grid.width * self.pool.width,
            ),
        )


@dataclass(frozen=True)
class SummaryShape:
    """Per-frame summary resolution and the original-token region each
    summary token covers."""

    frame_summary: GridShape
    receptive_field: GridShape

    @property
    def tokens_per_frame(self) -> int:
        return self.frame_summary.area


@dataclass(frozen=True, order=True)
class TokenIndex:
    """Position of one token: video frame, token row and column in frame."""

    frame: int
    row: int
    col: int

    def flat(self, frame_shape: GridShape) -> int:
        """Frame-major, row-major raster position within the whole video."""
        return (self.frame * frame_shape.height + self.row) * frame_shape.width + self.col


@dataclass(frozen=True)
class Accounting:
    """Token counts and summary geometry implied by a configuration."""

    compressed_count: int
    summary_count: int
    total_frames: int
    receptive_field: GridShape | None
    frame_summary: GridShape | None

    @property
    def total_count(self) -> int:
        return self.compressed_count + self.summary_count


def derive_accounting(config: PipelineConfig) -> Accounting:
    """Compute the token budget of a configuration.

    The compressed count is segments * segment_len * cells_per_frame,
    which collapses to segment_len * tokens_per_frame: the temporal
    expansion exactly cancels the spatial compression.
    """
    summary = config.summary_shape
    return Accounting(
        compressed_count=config.segments * config.segment_len * config.cells_per_frame,
        summary_count=(
            0
            if summary is None
            else config.segments * config.segment_len * summary.tokens_per_frame
        ),
        total_frames=config.total_frames,
        receptive_field=None if summary is None else summary.receptive_field,
        frame_summary=None if summary is None else summary.frame_summary,
    )


@dataclass(frozen=True, eq=False)
class TokenDump:
    """A video's per-segment attention scores and token embeddings.

    ``attention`` has shape (segments, segment_len, H, W): the score of
    each visual token with respect to the final query token. All values
    must be finite and non-negative; the engine is agnostic to whether
    they are post-softmax probabilities or raw magnitudes (``post_softmax``
    records the producer's convention). ``embeddings`` has shape
    (segments, segment_len, H, W, embed_dim).

    Arrays are stored as little-endian float32, the payload precision of
    the on-disk format, so serialization is lossless and canonical.
    Instances are treated as immutable after construction.
    """

    segments: int
    segment_len: int
    frame_shape: GridShape
    embed_dim: int
    attention: np.ndarray = field(repr=False)
    embeddings: np.ndarray = field(repr=False)
    post_softmax: bool = False

    def __post_init__(self) -> None:
        for name, value in (
            ("segments", self.segments),
            ("segment_len", self.segment_len),
            ("embed_dim", self.embed_dim),
        ):
            if value < 1:
                raise ShapeError(f"{name} must be >= 1, got {value}")
        # Private copies: instances own immutable snapshots of their arrays.
        attn = np.array(self.attention, dtype="<f4", order="C")
        emb = np.array(self.embeddings, dtype="<f4", order="C")
        expect_attn = (
            self.segments,
            self.segment_len,
            self.frame_shape.height,
            self.frame_shape.width,
        )
        if attn.shape != expect_attn:
            raise ShapeError(
                f"attention shape {attn.shape} does not match declared {expect_attn}"
            )
        if emb.shape != expect_attn + (self.embed_dim,):
            raise ShapeError(
                f"embeddings shape {emb.shape} does not match declared "
                f"{expect_attn + (self.embed_dim,)}"
            )
        if not np.isfinite(attn).all():
            bad = np.argwhere(~np.isfinite(attn))[0]
            raise NonFiniteError(f"attention contains non-finite value at {tuple(int(i) for i in bad)}")
        if not np.isfinite(emb).all():
            bad = np.argwhere(~np.isfinite(emb))[0]
            raise NonFiniteError(f"embeddings contain non-finite value at {tuple(int(i) for i in bad)}")
        if (attn < 0).any():
            bad = np.argwhere(attn < 0)[0]
            raise NegativeAttentionError(
                f"attention contains negative value at {tuple(int(i) for i in bad)}"
            )
        attn.flags.writeable = False
        emb.flags.writeable = False
        object.__setattr__(self, "attention", attn)
        object.__setattr__(self, "embeddings", emb)

    @property
    def tokens_per_segment(self) -> int:
        return self.segment_len * self.frame_shape.area

    def matches(self, config: PipelineConfig) -> bool:
        return (
            self.segments == config.segments
            and self.segment_len == config.segment_len
            and self.frame_shape == config.frame_shape
            and self.embed_dim == config.embed_dim
        )

    def __eq__(self, other: object) -> bool:
        # Bitwise comparison: equality must imply identical serialized bytes.
        if not isinstance(other, TokenDump):
            return NotImplemented
        return (
            self.segments == other.segments
            and self.segment_len == other.segment_len
            and self.frame_shape == other.frame_shape
            and self.embed_dim == other.embed_dim
            and self.post_softmax == other.post_softmax
            and self.attention.tobytes() == other.attention.tobytes()
            and self.embeddings.tobytes() == other.embeddings.tobytes()
        )

    def __hash__(self) -> int:  # consistent with __eq__, rarely needed
        return hash((self.segments, self.segment_len, self.frame_shape, self.embed_dim))
