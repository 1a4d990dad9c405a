"""Two-stage pipeline: per-segment compression, merge, summary, assembly.

Stage one compresses every segment independently with grid attention
selection; stage two concatenates the survivors in temporal order
(segment 0 first) and, when a pool is configured, appends the pooled
summary at the head or tail of the sequence. Segments are independent
work units: the parallel runner distributes them over a thread pool and
reassembles by segment index, so its output is bit-identical to the
sequential path for every worker count.

Final sequences serialize as VTSQ1 (little-endian):

====================  ======  =========================================
offset                size    content
====================  ======  =========================================
0                     4       magic ASCII ``VTSQ``
4                     4       version, uint32 (= 1)
8                     36      nine uint32: segments, segment_len,
                              frame height, frame width, embed_dim,
                              grid height, grid width, pool height,
                              pool width (pool fields 0 when absent)
44                    1       placement byte: 0 none, 1 head, 2 tail
45                    8       two uint32: compressed count, summary count
53                    —       per token: origin byte (0 compressed,
                              1 summary), three uint32 coordinates
                              (frame, row, col), embed_dim float32s
====================  ======  =========================================
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, NamedTuple

import numpy as np

from .errors import (
    ConfigError,
    MagicError,
    ShapeError,
    TruncatedPayloadError,
    VersionError,
)
from .model import GridShape, Placement, PipelineConfig, TokenDump, derive_accounting
from .selection import CompressedSegment, gapool_compress
from .summary import vstail_pool

SEQ_MAGIC = b"VTSQ"
SEQ_VERSION = 1
SEQ_HEADER_SIZE = 53

ORIGIN_COMPRESSED = 0
ORIGIN_SUMMARY = 1

_PLACEMENT_BYTE = {Placement.NONE: 0, Placement.HEAD: 1, Placement.TAIL: 2}
_BYTE_PLACEMENT = {v: k for k, v in _PLACEMENT_BYTE.items()}


class FinalToken(NamedTuple):
    origin: str  # "compressed" | "summary"
    frame: int
    row: int
    col: int
    embedding: np.ndarray


@dataclass(frozen=True, eq=False)
class FinalSequence:
    """The ordered token sequence handed to the downstream model.

    Compressed tokens carry their original (frame, row, col) position;
    summary tokens carry (frame, summary row, summary col) at summary
    resolution. Query-prompt concatenation happens downstream and is
    not part of this sequence.
    """

    config: PipelineConfig
    origins: np.ndarray = field(repr=False)
    coords: np.ndarray = field(repr=False)
    embeddings: np.ndarray = field(repr=False)
    compressed_count: int = 0
    summary_count: int = 0

    def __len__(self) -> int:
        return self.origins.shape[0]

    def tokens(self) -> Iterator[FinalToken]:
        names = ("compressed", "summary")
        for origin, (f, r, c), emb in zip(self.origins, self.coords, self.embeddings):
            yield FinalToken(names[int(origin)], int(f), int(r), int(c), emb)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FinalSequence):
            return NotImplemented
        return (
            self.config == other.config
            and self.compressed_count == other.compressed_count
            and self.summary_count == other.summary_count
            and np.array_equal(self.origins, other.origins)
            and np.array_equal(self.coords, other.coords)
            and self.embeddings.tobytes() == other.embeddings.tobytes()
        )


def _check_dump_matches(dump: TokenDump, config: PipelineConfig) -> None:
    pairs = (
        ("segments", dump.segments, config.segments),
        ("segment_len", dump.segment_len, config.segment_len),
        ("frame height", dump.frame_shape.height, config.frame_shape.height),
        ("frame width", dump.frame_shape.width, config.frame_shape.width),
        ("embed_dim", dump.embed_dim, config.embed_dim),
    )
    bad = [f"{name}: dump has {a}, config expects {b}" for name, a, b in pairs if a != b]
    if bad:
        raise ShapeError("dump does not match config; " + "; ".join(bad))


def _assemble(
    segments: list[CompressedSegment], config: PipelineConfig
) -> FinalSequence:
    positions = np.concatenate([s.positions for s in segments])
    embeddings = np.concatenate([s.embeddings for s in segments])

    if config.pool is not None:
        merged = embeddings.reshape(
            config.total_frames, config.grid_rows, config.grid_cols, config.embed_dim
        )
        summary = vstail_pool(merged, config.pool, config.grid)
        parts_c = (positions, embeddings, ORIGIN_COMPRESSED)
        parts_s = (summary.coords, summary.embeddings, ORIGIN_SUMMARY)
        ordered = (
            (parts_s, parts_c)
            if config.summary_placement is Placement.HEAD
            else (parts_c, parts_s)
        )
        coords = np.concatenate([p[0] for p in ordered])
        emb = np.concatenate([p[1] for p in ordered])
        origins = np.concatenate(
            [np.full(len(p[0]), p[2], dtype=np.uint8) for p in ordered]
        )
        summary_count = len(summary)
    else:
        coords = positions
        emb = embeddings
        origins = np.zeros(len(positions), dtype=np.uint8)
        summary_count = 0

    seq = FinalSequence(
        config=config,
        origins=origins,
        coords=coords,
        embeddings=emb,
        compressed_count=len(positions),
        summary_count=summary_count,
    )
    accounting = derive_accounting(config)
    assert seq.compressed_count == accounting.compressed_count
    assert seq.summary_count == accounting.summary_count
    return seq


def run_pipeline(dump: TokenDump, config: PipelineConfig) -> FinalSequence:
    """Compress every segment with its own attention map and assemble
    the final sequence. Counts always match ``derive_accounting``."""
    _check_dump_matches(dump, config)
    compressed = [
        gapool_compress(dump.attention[s], dump.embeddings[s], config.grid, s)
        for s in range(dump.segments)
    ]
    return _assemble(compressed, config)


def run_pipeline_parallel(
    dump: TokenDump, config: PipelineConfig, workers: int
) -> FinalSequence:
    """Same result as ``run_pipeline``, with stage one fanned out over a
    thread pool. Output is bit-identical for every worker count; surplus
    workers idle."""
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    _check_dump_matches(dump, config)

    def one(s: int) -> CompressedSegment:
        return gapool_compress(dump.attention[s], dump.embeddings[s], config.grid, s)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        compressed = list(pool.map(one, range(dump.segments)))
    return _assemble(compressed, config)


def _token_dtype(embed_dim: int) -> np.dtype:
    return np.dtype(
        [("origin", "u1"), ("coords", "<u4", (3,)), ("embedding", "<f4", (embed_dim,))]
    )


def write_sequence(seq: FinalSequence, sink: BinaryIO) -> None:
    """Serialize a final sequence in canonical VTSQ1 bytes."""
    cfg = seq.config
    pool = cfg.pool or GridShape(1, 1)
    sink.write(SEQ_MAGIC)
    sink.write(
        struct.pack(
            "<10IB2I",
            SEQ_VERSION,
            cfg.segments,
            cfg.segment_len,
            cfg.frame_shape.height,
            cfg.frame_shape.width,
            cfg.embed_dim,
            cfg.grid.height,
            cfg.grid.width,
            pool.height if cfg.pool else 0,
            pool.width if cfg.pool else 0,
            _PLACEMENT_BYTE[cfg.summary_placement],
            seq.compressed_count,
            seq.summary_count,
        )
    )
    records = np.empty(len(seq), dtype=_token_dtype(cfg.embed_dim))
    records["origin"] = seq.origins
    records["coords"] = seq.coords
    records["embedding"] = seq.embeddings
    sink.write(records.tobytes())


def read_sequence(source: BinaryIO) -> FinalSequence:
    """Parse a VTSQ1 stream back into a FinalSequence."""
    header = source.read(SEQ_HEADER_SIZE)
    if len(header) < 4 or header[:4] != SEQ_MAGIC:
        raise MagicError(f"bad magic at byte 0: {header[:4]!r}, expected {SEQ_MAGIC!r}")
    if len(header) < SEQ_HEADER_SIZE:
        raise TruncatedPayloadError(
            f"header truncated: got {len(header)} bytes, need {SEQ_HEADER_SIZE}"
        )
    (
        version,
        g,
        f,
        h,
        w,
        d,
        grid_h,
        grid_w,
        pool_h,
        pool_w,
        placement_byte,
        n_compressed,
        n_summary,
    ) = struct.unpack("<10IB2I", header[4:])
    if version != SEQ_VERSION:
        raise VersionError(
            f"unsupported version {version} at byte 4, expected {SEQ_VERSION}"
        )
    if placement_byte not in _BYTE_PLACEMENT:
        raise ShapeError(f"invalid placement byte {placement_byte} at byte 44")
    config = PipelineConfig(
        segment_len=f,
        grid=GridShape(grid_h, grid_w),
        embed_dim=d,
        frame_shape=GridShape(h, w),
        pool=GridShape(pool_h, pool_w) if pool_h or pool_w else None,
        summary_placement=_BYTE_PLACEMENT[placement_byte],
    )
    if config.segments != g:
        raise ShapeError(
            f"segment count {g} at byte 8 does not equal grid area {config.segments}"
        )
    n = n_compressed + n_summary
    dtype = _token_dtype(d)
    data = source.read(n * dtype.itemsize)
    if len(data) < n * dtype.itemsize:
        raise TruncatedPayloadError(
            f"token payload truncated at byte {SEQ_HEADER_SIZE + len(data)}: "
            f"expected {n * dtype.itemsize} bytes from offset {SEQ_HEADER_SIZE}"
        )
    if source.read(1):
        raise ShapeError(
            f"trailing bytes beyond declared payload at byte "
            f"{SEQ_HEADER_SIZE + n * dtype.itemsize}"
        )
    records = np.frombuffer(data, dtype=dtype)
    return FinalSequence(
        config=config,
        origins=records["origin"].copy(),
        coords=records["coords"].astype(np.int64),
        embeddings=records["embedding"].copy(),
        compressed_count=n_compressed,
        summary_count=n_summary,
    )


def sequence_to_bytes(seq: FinalSequence) -> bytes:
    import io

    buf = io.BytesIO()
    write_sequence(seq, buf)
    return buf.getvalue()
