"""Concentration reports and heatmap aggregation."""

import csv
import io
import json

import numpy as np
import pytest

from vtcomp import (
    CALIBRATED_BIAS_SHARPNESS,
    CALIBRATED_BIAS_STRENGTH,
    ConfigError,
    GridShape,
    PipelineConfig,
    ShapeError,
    SyntheticBiasParams,
    aggregate_heatmap,
    grid_selection_concentration,
    heatmap_csv,
    heatmap_payload,
    mean_report_payload,
    report_payload,
    spread_seeds,
    synthesize,
    tail_concentration,
)
from conftest import random_dump


class TestTailConcentration:
    def test_ramp_concentrates_in_second_frame(self):
        attn = np.arange(1, 11, dtype=np.float32).reshape(2, 1, 5)
        report = tail_concentration(attn, 4)
        assert report.counts == (0, 4)
        assert report.shares == (0.0, 1.0)

    def test_uniform_ties_select_prefix(self):
        attn = np.ones((4, 2, 3), dtype=np.float32)
        report = tail_concentration(attn, 24)
        assert report.shares == (0.25, 0.25, 0.25, 0.25)
        partial = tail_concentration(attn, 6)
        assert partial.counts == (6, 0, 0, 0)  # ties resolve to earliest

    def test_counts_sum_to_k(self, rng):
        attn = rng.random((5, 6, 6), dtype=np.float32)
        report = tail_concentration(attn, 50)
        assert sum(report.counts) == 50
        assert sum(report.shares) == pytest.approx(1.0)

    def test_scale_invariant(self, rng):
        attn = rng.random((3, 4, 4), dtype=np.float32)
        assert (
            tail_concentration(attn, 10).counts
            == tail_concentration(attn * np.float32(8.0), 10).counts
        )

    def test_k_out_of_range(self, rng):
        with pytest.raises(ConfigError):
            tail_concentration(rng.random((1, 2, 2), dtype=np.float32), 5)


class TestGridSelectionConcentration:
    def test_always_uniform(self, rng):
        frames = 5
        biased = rng.random((frames, 8, 8), dtype=np.float32)
        biased[-1] += 1e6  # adversarial tail mass
        for attn in (rng.random((frames, 8, 8), dtype=np.float32), biased,
                     np.ones((frames, 8, 8), dtype=np.float32)):
            report = grid_selection_concentration(attn, GridShape(2, 2))
            assert report.counts == (16,) * frames
            assert report.shares == (1 / frames,) * frames


class TestReportPayloads:
    def test_single_report_schema(self, rng):
        report = tail_concentration(rng.random((2, 2, 2), dtype=np.float32), 3)
        payload = report_payload(report)
        assert list(payload.keys()) == ["k", "frames", "counts", "shares"]
        json.dumps(payload)

    def test_mean_payload_preserves_sums(self, rng):
        reports = [
            tail_concentration(rng.random((2, 3, 3), dtype=np.float32), 6)
            for _ in range(5)
        ]
        payload = mean_report_payload(reports)
        assert sum(payload["counts"]) == pytest.approx(6)
        assert sum(payload["shares"]) == pytest.approx(1.0)

    def test_mean_payload_rejects_mixed_shapes(self, rng):
        a = tail_concentration(rng.random((2, 3, 3), dtype=np.float32), 6)
        b = tail_concentration(rng.random((3, 3, 3), dtype=np.float32), 6)
        with pytest.raises(ShapeError):
            mean_report_payload([a, b])


class TestHeatmap:
    def test_single_segment_verbatim(self, rng):
        dump = random_dump(rng, segments=1, segment_len=2, frame_shape=GridShape(3, 3))
        agg = aggregate_heatmap([dump])
        np.testing.assert_array_equal(agg.mean_scores, dump.attention[0].astype(np.float64))
        assert agg.sample_count == 1 and agg.segment_count == 1

    def test_two_dump_mean(self, rng):
        a = random_dump(rng, segments=1, segment_len=2, frame_shape=GridShape(4, 4))
        b = random_dump(rng, segments=1, segment_len=2, frame_shape=GridShape(4, 4))
        agg = aggregate_heatmap([a, b])
        oracle = (a.attention[0].astype(np.float64) + b.attention[0]) / 2
        np.testing.assert_allclose(agg.mean_scores, oracle, rtol=1e-15)

    def test_segment_selector(self, rng):
        dump = random_dump(rng, segments=3, segment_len=1, frame_shape=GridShape(2, 2))
        agg = aggregate_heatmap([dump], segment=2)
        np.testing.assert_array_equal(agg.mean_scores, dump.attention[2].astype(np.float64))
        with pytest.raises(ConfigError, match="out of range"):
            aggregate_heatmap([dump], segment=3)

    def test_permutation_invariance(self, rng):
        dumps = [
            random_dump(rng, segments=2, segment_len=1, frame_shape=GridShape(4, 4))
            for _ in range(6)
        ]
        fwd = aggregate_heatmap(dumps).mean_scores
        rev = aggregate_heatmap(dumps[::-1]).mean_scores
        np.testing.assert_allclose(fwd, rev, rtol=1e-12)

    def test_empty_input_rejected(self):
        with pytest.raises(ConfigError, match="empty"):
            aggregate_heatmap([])

    def test_shape_heterogeneity_rejected(self, rng):
        a = random_dump(rng, frame_shape=GridShape(4, 4), segments=1, segment_len=1)
        b = random_dump(rng, frame_shape=GridShape(2, 2), segments=1, segment_len=1)
        with pytest.raises(ShapeError, match="segment shape"):
            aggregate_heatmap([a, b])

    def test_strong_bias_rises_along_position(self):
        config = PipelineConfig(segment_len=5, grid=GridShape(1, 1), embed_dim=1)
        dumps = [
            synthesize(
                config,
                SyntheticBiasParams(
                    seed=s,
                    bias_strength=CALIBRATED_BIAS_STRENGTH,
                    bias_sharpness=CALIBRATED_BIAS_SHARPNESS,
                ),
            )
            for s in spread_seeds(60)
        ]
        flat = aggregate_heatmap(dumps).mean_scores.reshape(-1)
        deciles = flat.reshape(10, -1).mean(axis=1)
        assert (np.diff(deciles) > 0).all()
        slope = np.polyfit(np.linspace(0, 1, flat.size), flat, 1)[0]
        assert slope > 0

    def test_csv_rendering(self, rng):
        dump = random_dump(rng, segments=1, segment_len=2, frame_shape=GridShape(2, 3))
        text = heatmap_csv(aggregate_heatmap([dump]))
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == ["frame", "row", "col", "mean_score"]
        assert len(rows) == 1 + 2 * 2 * 3
        assert rows[1][:3] == ["0", "0", "0"]
        assert float(rows[-1][3]) == pytest.approx(float(dump.attention[0, 1, 1, 2]))
        payload = heatmap_payload(aggregate_heatmap([dump]))
        assert payload["frames"] == 2 and len(payload["mean_scores"]) == 12
