"""Configuration arithmetic, validation, and dump invariants."""

import numpy as np
import pytest

from vtcomp import (
    ConfigError,
    GridShape,
    NegativeAttentionError,
    NonFiniteError,
    PipelineConfig,
    Placement,
    ShapeError,
    TokenDump,
    TokenIndex,
    derive_accounting,
)


def cfg(segment_len=5, grid=(2, 2), pool=None, frame=(24, 24), embed_dim=4):
    return PipelineConfig(
        segment_len=segment_len,
        grid=GridShape(*grid),
        embed_dim=embed_dim,
        frame_shape=GridShape(*frame),
        pool=GridShape(*pool) if pool else None,
        summary_placement=Placement.TAIL if pool else Placement.NONE,
    )


class TestAccounting:
    def test_default_with_pool(self):
        acc = derive_accounting(cfg(pool=(3, 4)))
        assert acc.compressed_count == 2880
        assert acc.summary_count == 240
        assert acc.total_frames == 20
        assert acc.receptive_field == GridShape(6, 8)
        assert acc.frame_summary == GridShape(4, 3)

    def test_default_without_pool(self):
        acc = derive_accounting(cfg())
        assert acc.compressed_count == 2880
        assert acc.summary_count == 0
        assert acc.receptive_field is None

    def test_identity_grid_single_segment(self):
        acc = derive_accounting(cfg(grid=(1, 1)))
        assert acc.compressed_count == 2880
        assert acc.total_frames == 5

    def test_longer_segment(self):
        assert derive_accounting(cfg(segment_len=6)).compressed_count == 3456

    def test_wider_grid_frames(self):
        assert derive_accounting(cfg(grid=(2, 4))).total_frames == 40

    def test_compressed_count_independent_of_grid(self):
        counts = {
            derive_accounting(cfg(grid=g)).compressed_count
            for g in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 4), (4, 6), (6, 6)]
        }
        assert counts == {2880}

    def test_receptive_field_area_times_summary_tokens_covers_frame(self):
        combos = [
            ((1, 2), (2, 2)),
            ((2, 2), (3, 4)),
            ((2, 2), (2, 2)),
            ((2, 2), (12, 12)),
            ((2, 3), (2, 4)),
        ]
        for grid, pool in combos:
            acc = derive_accounting(cfg(grid=grid, pool=pool))
            assert acc.receptive_field.area * acc.frame_summary.area == 576

    def test_pure_function(self):
        assert derive_accounting(cfg(pool=(3, 4))) == derive_accounting(cfg(pool=(3, 4)))


class TestConfigValidation:
    def test_grid_must_tile_frame(self):
        with pytest.raises(ConfigError, match="height 24 not divisible by grid height 5"):
            cfg(grid=(5, 5))

    def test_pool_must_tile_grid_resolution(self):
        with pytest.raises(ConfigError, match="pool height 5"):
            cfg(pool=(5, 5))

    def test_placement_requires_pool(self):
        with pytest.raises(ConfigError, match="requires a pool"):
            PipelineConfig(
                segment_len=5,
                grid=GridShape(2, 2),
                embed_dim=4,
                summary_placement=Placement.TAIL,
            )

    def test_pool_requires_placement(self):
        with pytest.raises(ConfigError, match="summary_placement"):
            PipelineConfig(
                segment_len=5, grid=GridShape(2, 2), embed_dim=4, pool=GridShape(3, 4)
            )

    def test_positive_dimensions(self):
        with pytest.raises(ConfigError):
            GridShape(0, 3)
        with pytest.raises(ConfigError):
            cfg(segment_len=0)

    def test_derived_dimensions(self):
        c = cfg(grid=(2, 3), pool=(2, 2), frame=(24, 24))
        assert (c.segments, c.grid_rows, c.grid_cols) == (6, 12, 8)
        assert c.cells_per_frame == 96
        assert c.tokens_per_segment == 2880
        assert c.summary_shape.frame_summary == GridShape(6, 4)
        assert c.summary_shape.receptive_field == GridShape(4, 6)


class TestTokenIndex:
    def test_flat_raster_order(self):
        frame = GridShape(24, 24)
        assert TokenIndex(0, 0, 0).flat(frame) == 0
        assert TokenIndex(0, 0, 23).flat(frame) == 23
        assert TokenIndex(0, 1, 0).flat(frame) == 24
        assert TokenIndex(1, 0, 0).flat(frame) == 576
        assert TokenIndex(2, 3, 7).flat(frame) == 2 * 576 + 3 * 24 + 7


class TestTokenDump:
    def shape_args(self, attention, embeddings):
        return dict(
            segments=1,
            segment_len=1,
            frame_shape=GridShape(2, 2),
            embed_dim=1,
            attention=attention,
            embeddings=embeddings,
        )

    def test_accepts_minimal(self):
        d = TokenDump(
            **self.shape_args(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 2, 2, 1)))
        )
        assert d.attention.dtype == np.float32
        assert not d.attention.flags.writeable

    def test_rejects_wrong_shape(self):
        with pytest.raises(ShapeError, match="attention shape"):
            TokenDump(**self.shape_args(np.zeros((1, 1, 2, 3)), np.zeros((1, 1, 2, 2, 1))))
        with pytest.raises(ShapeError, match="embeddings shape"):
            TokenDump(**self.shape_args(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 2, 2, 2))))

    def test_rejects_non_finite(self):
        attn = np.zeros((1, 1, 2, 2))
        attn[0, 0, 1, 1] = np.nan
        with pytest.raises(NonFiniteError, match=r"\(0, 0, 1, 1\)"):
            TokenDump(**self.shape_args(attn, np.zeros((1, 1, 2, 2, 1))))
        emb = np.zeros((1, 1, 2, 2, 1))
        emb[0, 0, 0, 1, 0] = np.inf
        with pytest.raises(NonFiniteError, match="embeddings"):
            TokenDump(**self.shape_args(np.zeros((1, 1, 2, 2)), emb))

    def test_rejects_negative_attention(self):
        attn = np.zeros((1, 1, 2, 2))
        attn[0, 0, 0, 1] = -0.5
        with pytest.raises(NegativeAttentionError):
            TokenDump(**self.shape_args(attn, np.zeros((1, 1, 2, 2, 1))))

    def test_equality_is_bitwise(self):
        a = np.ones((1, 1, 2, 2), dtype=np.float32)
        d1 = TokenDump(**self.shape_args(a, np.zeros((1, 1, 2, 2, 1), np.float32)))
        d2 = TokenDump(**self.shape_args(a.copy(), np.zeros((1, 1, 2, 2, 1), np.float32)))
        assert d1 == d2
        # -0.0 equals +0.0 numerically but not bitwise; canonical encoding
        # requires these to compare unequal
        d3 = TokenDump(**self.shape_args(a, np.full((1, 1, 2, 2, 1), -0.0, np.float32)))
        assert d1 != d3

    def test_does_not_freeze_caller_arrays(self):
        a = np.ones((1, 1, 2, 2), dtype=np.float32)
        e = np.ones((1, 1, 2, 2, 1), dtype=np.float32)
        TokenDump(**self.shape_args(a, e))
        a[0, 0, 0, 0] = 2.0  # still writeable
