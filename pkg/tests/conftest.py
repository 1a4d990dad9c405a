"""Shared fixtures: random dump factories and brute-force oracles.

The oracles here are deliberately naive (pure-Python loops, full sorts)
and independent of the library's vectorized implementations; they are
the reference the fast paths are checked against.
"""

from __future__ import annotations

import numpy as np
import pytest

from vtcomp import GridShape, PipelineConfig, TokenDump


def random_dump(
    rng: np.random.Generator,
    segments: int = 4,
    segment_len: int = 5,
    frame_shape: GridShape = GridShape(24, 24),
    embed_dim: int = 4,
    post_softmax: bool = False,
) -> TokenDump:
    shape = (segments, segment_len, frame_shape.height, frame_shape.width)
    return TokenDump(
        segments=segments,
        segment_len=segment_len,
        frame_shape=frame_shape,
        embed_dim=embed_dim,
        attention=rng.random(shape, dtype=np.float32),
        embeddings=rng.standard_normal(shape + (embed_dim,), dtype=np.float32),
        post_softmax=post_softmax,
    )


def random_small_dump(rng: np.random.Generator) -> TokenDump:
    """Valid dump with small random dimensions, occasionally tied scores."""
    segments = int(rng.integers(1, 4))
    segment_len = int(rng.integers(1, 4))
    height = int(rng.integers(1, 9))
    width = int(rng.integers(1, 9))
    embed_dim = int(rng.integers(1, 5))
    shape = (segments, segment_len, height, width)
    if rng.random() < 0.3:
        attention = rng.integers(0, 3, shape).astype(np.float32)
    else:
        attention = rng.random(shape, dtype=np.float32)
    return TokenDump(
        segments=segments,
        segment_len=segment_len,
        frame_shape=GridShape(height, width),
        embed_dim=embed_dim,
        attention=attention,
        embeddings=rng.standard_normal(shape + (embed_dim,), dtype=np.float32),
    )


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def brute_force_grid_argmax(
    attention: np.ndarray, grid_h: int, grid_w: int
) -> list[tuple[int, int, int]]:
    """Per-cell max scan; first (row-major) maximum wins each cell."""
    frames, height, width = attention.shape
    winners = []
    for f in range(frames):
        for gi in range(height // grid_h):
            for gj in range(width // grid_w):
                best = None
                best_score = None
                for p in range(grid_h):
                    for q in range(grid_w):
                        r, c = gi * grid_h + p, gj * grid_w + q
                        s = attention[f, r, c]
                        if best_score is None or s > best_score:
                            best_score = s
                            best = (f, r, c)
                winners.append(best)
    return winners


def sort_oracle_topk(scores: np.ndarray, k: int) -> list[int]:
    """Full sort by (-score, index); returns chosen flat indices ascending."""
    flat = list(np.asarray(scores).reshape(-1))
    order = sorted(range(len(flat)), key=lambda i: (-flat[i], i))[:k]
    return sorted(order)


def window_mean_oracle(
    embeddings: np.ndarray, pool_h: int, pool_w: int
) -> np.ndarray:
    """Sequential float64 accumulation per window, one scalar at a time."""
    frames, rows, cols, dim = embeddings.shape
    out = np.zeros((frames, rows // pool_h, cols // pool_w, dim), dtype=np.float64)
    for f in range(frames):
        for i in range(rows // pool_h):
            for j in range(cols // pool_w):
                for d in range(dim):
                    acc = 0.0
                    for p in range(pool_h):
                        for q in range(pool_w):
                            acc += float(embeddings[f, i * pool_h + p, j * pool_w + q, d])
                    out[f, i, j, d] = acc / (pool_h * pool_w)
    return out


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)


@pytest.fixture
def default_config() -> PipelineConfig:
    return PipelineConfig(segment_len=5, grid=GridShape(2, 2), embed_dim=4)
