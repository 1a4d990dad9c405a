"""Summary tail: large-kernel average pooling over compressed frames.

Pooling is purely spatial and per-frame. Each frame of compressed
tokens (at grid resolution) is tiled by disjoint pool.height x
pool.width windows; every window becomes one summary token whose
embedding is the window's arithmetic mean, accumulated in float64 and
stored at float32 payload precision. The windows are averaged with
equal weights: the tail summarizes content, it does not re-rank it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ConfigError, ShapeError
from .model import GridShape, SummaryShape


class SummaryToken(NamedTuple):
    frame: int
    row: int
    col: int
    embedding: np.ndarray


@dataclass(frozen=True, eq=False)
class SummarySequence:
    """Summary tokens in (frame, summary row, summary col) raster order."""

    shape: SummaryShape
    frames: int
    coords: np.ndarray = field(repr=False)
    embeddings: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.coords.shape[0]

    def tokens(self) -> Iterator[SummaryToken]:
        for (f, r, c), emb in zip(self.coords, self.embeddings):
            yield SummaryToken(int(f), int(r), int(c), emb)


def vstail_pool(
    embeddings: np.ndarray,
    pool: GridShape,
    grid: GridShape = GridShape(1, 1),
) -> SummarySequence:
    """Pool per-frame embeddings into a short summary sequence.

    ``embeddings`` has shape (frames, rows, cols, dim) — the merged
    compressed tokens of all segments, one spatial map per frame.
    ``grid`` is the stage-one cell size and only affects bookkeeping:
    the recorded receptive field of a summary token is
    (grid.height * pool.height) x (grid.width * pool.width) original
    tokens.
    """
    emb = np.asarray(embeddings)
    if emb.ndim != 4:
        raise ShapeError(f"embeddings must be (frames, rows, cols, dim), got {emb.shape}")
    frames, rows, cols, dim = emb.shape
    if rows % pool.height != 0:
        raise ConfigError(f"rows {rows} not divisible by pool height {pool.height}")
    if cols % pool.width != 0:
        raise ConfigError(f"cols {cols} not divisible by pool width {pool.width}")
    out_rows = rows // pool.height
    out_cols = cols // pool.width

    windows = emb.reshape(frames, out_rows, pool.height, out_cols, pool.width, dim)
    means = windows.astype(np.float64).mean(axis=(2, 4)).astype(emb.dtype)

    f_ix = np.arange(frames)[:, None, None]
    r_ix = np.broadcast_to(np.arange(out_rows)[None, :, None], (frames, out_rows, out_cols))
    c_ix = np.broadcast_to(np.arange(out_cols)[None, None, :], (frames, out_rows, out_cols))
    coords = np.stack(
        [np.broadcast_to(f_ix, r_ix.shape), r_ix, c_ix], axis=-1
    ).reshape(-1, 3)

    shape = SummaryShape(
        frame_summary=GridShape(out_rows, out_cols),
        receptive_field=GridShape(grid.height * pool.height, grid.width * pool.width),
    )
    return SummarySequence(
        shape=shape,
        frames=frames,
        coords=coords.astype(np.int64),
        embeddings=means.reshape(-1, dim),
    )
