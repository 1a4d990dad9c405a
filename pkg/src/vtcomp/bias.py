"""Positional attention bias measurement.

Two views of the same phenomenon: how top-k selection distributes over
frames (concentration reports), and what the attention field looks like
on average over a corpus (heatmap aggregation). Reports serialize to
JSON as ``{"k": ..., "frames": ..., "counts": [...], "shares": [...]}``
and heatmaps to CSV with columns ``frame,row,col,mean_score``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ShapeError
from .model import GridShape, TokenDump
from .selection import gapool_compress, topk_flat_indices


@dataclass(frozen=True)
class BiasReport:
    """Per-frame distribution of one selection run over one segment."""

    k: int
    frames: int
    counts: tuple[int, ...]
    shares: tuple[float, ...]

    def __post_init__(self) -> None:
        assert sum(self.counts) == self.k
        assert len(self.counts) == len(self.shares) == self.frames


@dataclass(frozen=True)
class HeatmapAggregate:
    """Position-wise mean attention over all aggregated segments."""

    mean_scores: np.ndarray  # (frames, height, width) float64
    sample_count: int        # number of dumps aggregated
    segment_count: int       # number of segments the mean runs over

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HeatmapAggregate):
            return NotImplemented
        return (
            self.sample_count == other.sample_count
            and self.segment_count == other.segment_count
            and np.array_equal(self.mean_scores, other.mean_scores)
        )


def _report_from_frames(frame_indices: np.ndarray, frames: int, k: int) -> BiasReport:
    counts = np.bincount(frame_indices, minlength=frames)
    return BiasReport(
        k=k,
        frames=frames,
        counts=tuple(int(c) for c in counts),
        shares=tuple(float(c) / k for c in counts),
    )


def tail_concentration(attention: np.ndarray, k: int) -> BiasReport:
    """Count where the global top-k tokens of one segment land, per frame.

    Selection follows top-k rules exactly (ties to the smallest flat
    position), so the report is invariant under positive rescaling of
    the scores.
    """
    attn = np.asarray(attention)
    if attn.ndim != 3:
        raise ShapeError(f"attention must be (frames, height, width), got {attn.shape}")
    frames, height, width = attn.shape
    chosen = topk_flat_indices(attn, k)
    return _report_from_frames(chosen // (height * width), frames, k)


def grid_selection_concentration(attention: np.ndarray, grid: GridShape) -> BiasReport:
    """Report variant for grid selection: per-frame distribution of the
    grid-argmax survivors. Exactly uniform (1/frames) by construction."""
    attn = np.asarray(attention)
    if attn.ndim != 3:
        raise ShapeError(f"attention must be (frames, height, width), got {attn.shape}")
    dummy = np.zeros(attn.shape + (1,), dtype=np.float32)
    segment = gapool_compress(attn, dummy, grid)
    return _report_from_frames(
        segment.positions[:, 0], attn.shape[0], len(segment)
    )


def mean_report_payload(reports: Sequence[BiasReport]) -> dict:
    """Corpus-level JSON payload: mean per-frame counts and shares.

    All reports must share k and frames. Counts become means (floats),
    so they still sum to k and shares still sum to 1.
    """
    if not reports:
        raise ConfigError("cannot aggregate zero reports")
    k, frames = reports[0].k, reports[0].frames
    for r in reports:
        if r.k != k or r.frames != frames:
            raise ShapeError(
                f"cannot aggregate reports with mixed k/frames: "
                f"({r.k}, {r.frames}) vs ({k}, {frames})"
            )
    counts = np.mean([r.counts for r in reports], axis=0)
    if len(reports) == 1:
        return report_payload(reports[0])
    return {
        "k": k,
        "frames": frames,
        "counts": [float(c) for c in counts],
        "shares": [float(c) / k for c in counts],
    }


def report_payload(report: BiasReport) -> dict:
    return {
        "k": report.k,
        "frames": report.frames,
        "counts": list(report.counts),
        "shares": list(report.shares),
    }


def aggregate_heatmap(
    dumps: Iterable[TokenDump], segment: int | str = "all"
) -> HeatmapAggregate:
    """Position-wise mean attention over the selected segments of all dumps.

    ``segment`` is either "all" (every segment of every dump) or an
    integer index selecting one segment per dump. Dumps must agree on
    (segment_len, height, width); accumulation is float64 in input
    order, so permutations of the input agree to ~1e-12 relative.
    """
    if isinstance(segment, str) and segment != "all":
        raise ConfigError(f"segment selector must be 'all' or an index, got {segment!r}")
    total: np.ndarray | None = None
    shape: tuple[int, ...] | None = None
    n_dumps = 0
    n_segments = 0
    for dump in dumps:
        attn = dump.attention
        if shape is None:
            shape = attn.shape[1:]
            total = np.zeros(shape, dtype=np.float64)
        elif attn.shape[1:] != shape:
            raise ShapeError(
                f"dump {n_dumps} has segment shape {attn.shape[1:]}, expected {shape}"
            )
        if segment == "all":
            selected = attn.astype(np.float64)
        else:
            if not 0 <= int(segment) < dump.segments:
                raise ConfigError(
                    f"segment index {segment} out of range for dump {n_dumps} "
                    f"with {dump.segments} segments"
                )
            selected = attn[int(segment)][None].astype(np.float64)
        total += selected.sum(axis=0)
        n_segments += selected.shape[0]
        n_dumps += 1
    if n_dumps == 0:
        raise ConfigError("cannot aggregate an empty dump sequence")
    assert total is not None
    return HeatmapAggregate(
        mean_scores=total / n_segments,
        sample_count=n_dumps,
        segment_count=n_segments,
    )


def heatmap_csv(aggregate: HeatmapAggregate) -> str:
    """Render the heatmap as CSV rows of frame,row,col,mean_score."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame", "row", "col", "mean_score"])
    frames, height, width = aggregate.mean_scores.shape
    flat = aggregate.mean_scores.reshape(-1)
    pos = np.arange(flat.size)
    for f, r, c, v in zip(
        pos // (height * width), pos % (height * width) // width, pos % width, flat
    ):
        writer.writerow([int(f), int(r), int(c), repr(float(v))])
    return buf.getvalue()


def heatmap_payload(aggregate: HeatmapAggregate) -> dict:
    frames, height, width = aggregate.mean_scores.shape
    return {
        "frames": frames,
        "height": height,
        "width": width,
        "sample_count": aggregate.sample_count,
        "segment_count": aggregate.segment_count,
        "mean_scores": [float(v) for v in aggregate.mean_scores.reshape(-1)],
    }
