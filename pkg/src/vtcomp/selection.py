"""Token selection: per-grid attention argmax and the global top-k baseline.

Both selectors consume one segment's attention scores of shape
(segment_len, H, W) plus the matching embeddings and return the chosen
tokens with their original positions. Grid selection keeps exactly one
token per grid cell, so every frame contributes the same number of
tokens no matter how skewed the attention is; global top-k has no such
constraint and follows the attention mass wherever it concentrates.

Tie-breaking is deterministic: the candidate with the smallest flat
index wins (in-cell row-major for grid selection, whole-segment raster
for top-k). Scores are compared exactly as stored; argmax over finite
floats needs no tolerance. Selection is invariant under positive
rescaling of the scores, and output embeddings are bit-identical slices
of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ConfigError, NonFiniteError, ShapeError
from .model import GridShape, TokenIndex


class Selection(NamedTuple):
    index: TokenIndex
    embedding: np.ndarray
    score: float


@dataclass(frozen=True, eq=False)
class TokenSelection:
    """Tokens chosen from one segment, with original video positions.

    ``positions`` is an (n, 3) int array of (frame, row, col) where
    frame is the 0-based video-level frame index; rows are ordered as
    the selector emitted them. ``scores`` and ``embeddings`` align
    row-for-row.
    """

    segment_index: int
    frame_shape: GridShape
    positions: np.ndarray = field(repr=False)
    scores: np.ndarray = field(repr=False)
    embeddings: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def flat_positions(self) -> np.ndarray:
        h, w = self.frame_shape.height, self.frame_shape.width
        f, r, c = self.positions.T
        return (f * h + r) * w + c

    def selections(self) -> Iterator[Selection]:
        for (f, r, c), emb, score in zip(self.positions, self.embeddings, self.scores):
            yield Selection(TokenIndex(int(f), int(r), int(c)), emb, float(score))


@dataclass(frozen=True, eq=False)
class CompressedSegment(TokenSelection):
    """Grid-selection output: one token per (frame, grid row, grid col),
    sorted in that order, at resolution segment_len x grid_rows x grid_cols."""

    grid: GridShape = GridShape(1, 1)


def _check_segment_arrays(attention: np.ndarray, embeddings: np.ndarray) -> None:
    if attention.ndim != 3:
        raise ShapeError(
            f"attention must be (frames, height, width), got shape {attention.shape}"
        )
    if embeddings.ndim != 4 or embeddings.shape[:3] != attention.shape:
        raise ShapeError(
            f"embeddings shape {embeddings.shape} does not match attention "
            f"{attention.shape} plus an embedding axis"
        )
    if not np.isfinite(attention).all():
        bad = np.argwhere(~np.isfinite(attention))[0]
        raise NonFiniteError(f"attention contains non-finite value at {tuple(int(i) for i in bad)}")


def gapool_compress(
    attention: np.ndarray,
    embeddings: np.ndarray,
    grid: GridShape,
    segment_index: int = 0,
) -> CompressedSegment:
    """Select the highest-attention token inside every grid cell.

    Each frame is tiled by contiguous grid.height x grid.width cells;
    the argmax token of each cell survives with its embedding and
    position unchanged. Ties go to the smallest in-cell row-major
    index. ``segment_index`` offsets the emitted frame indices by
    ``segment_index * segment_len`` so positions are video-global.
    """
    _check_segment_arrays(attention, embeddings)
    frames, height, width = attention.shape
    if height % grid.height != 0:
        raise ConfigError(f"frame height {height} not divisible by grid height {grid.height}")
    if width % grid.width != 0:
        raise ConfigError(f"frame width {width} not divisible by grid width {grid.width}")
    grid_rows = height // grid.height
    grid_cols = width // grid.width

    # (F, H, W) -> (F, rows, cell_h, cols, cell_w) -> (F, rows, cols, cell)
    cells = attention.reshape(frames, grid_rows, grid.height, grid_cols, grid.width)
    cells = cells.transpose(0, 1, 3, 2, 4).reshape(frames, grid_rows, grid_cols, grid.area)
    winner = cells.argmax(axis=-1)  # first max = smallest in-cell flat index

    f_ix = np.arange(frames)[:, None, None]
    rows = np.arange(grid_rows)[None, :, None] * grid.height + winner // grid.width
    cols = np.arange(grid_cols)[None, None, :] * grid.width + winner % grid.width

    positions = np.stack(
        [
            np.broadcast_to(f_ix + segment_index * frames, winner.shape),
            rows,
            cols,
        ],
        axis=-1,
    ).reshape(-1, 3)
    scores = attention[f_ix, rows, cols].reshape(-1)
    selected = embeddings[f_ix, rows, cols].reshape(-1, embeddings.shape[-1])
    return CompressedSegment(
        segment_index=segment_index,
        frame_shape=GridShape(height, width),
        positions=positions.astype(np.int64),
        scores=scores,
        embeddings=selected,
        grid=grid,
    )


def topk_flat_indices(scores: np.ndarray, k: int) -> np.ndarray:
    """Flat indices of the k highest scores, ties to the smallest index,
    returned in ascending index order."""
    flat = np.asarray(scores).reshape(-1)
    if not 1 <= k <= flat.size:
        raise ConfigError(f"k must be in [1, {flat.size}], got {k}")
    if not np.isfinite(flat).all():
        bad = int(np.argwhere(~np.isfinite(flat))[0][0])
        raise NonFiniteError(f"scores contain non-finite value at flat index {bad}")
    order = np.argsort(-flat, kind="stable")[:k]
    return np.sort(order)


def global_topk(
    attention: np.ndarray,
    embeddings: np.ndarray,
    k: int,
    segment_index: int = 0,
) -> TokenSelection:
    """Select the k highest-scoring tokens of the whole segment.

    Output rows are sorted by flat raster position (temporal order), not
    by score, so the result feeds downstream consumers exactly like grid
    selection does.
    """
    _check_segment_arrays(attention, embeddings)
    frames, height, width = attention.shape
    chosen = topk_flat_indices(attention, k)
    f, rem = np.divmod(chosen, height * width)
    r, c = np.divmod(rem, width)
    positions = np.stack([f + segment_index * frames, r, c], axis=-1).astype(np.int64)
    return TokenSelection(
        segment_index=segment_index,
        frame_shape=GridShape(height, width),
        positions=positions,
        scores=attention.reshape(-1)[chosen],
        embeddings=embeddings.reshape(-1, embeddings.shape[-1])[chosen],
    )
