"""
Unit tests for feature-sequence construction and normalization.
"""

import numpy as np
import pytest

from src.errors import DataError, UnsupportedVariantError
from src.models.signals import (
    Burst,
    PEAK_OFFSET,
    Polarity,
    SequenceConfig,
    SpikeEvent,
    SpikeFeatures,
    Variant,
    WAVEFORM_LENGTH,
)
from src.tools.sequences import (
    apply_norm,
    build_binned_baseline,
    build_sequence,
    drop_features,
    feature_location,
    fit_norm_stats,
    handcrafted_features,
)
from tests.conftest import FS, make_segment, toy_sequence


def _spikes(times, amplitude: float = -100.0):
    events, features = [], []
    for i, t in enumerate(times):
        waveform = np.zeros(WAVEFORM_LENGTH)
        waveform[PEAK_OFFSET] = amplitude - i
        events.append(SpikeEvent(0, int(round(t * FS)), t, waveform, Polarity.NEGATIVE))
        features.append(SpikeFeatures(amplitude_uV=abs(amplitude) + i, isi_s=0.01 * (i + 1), duration_s=0.0005))
    return events, features


@pytest.fixture
def segment():
    return make_segment(np.zeros((1, int(0.1 * FS))))


@pytest.mark.unit
class TestBuildSequence:
    @pytest.mark.parametrize("variant, rows", [
        (Variant.V1_WAVEFORM, 100),
        (Variant.V2_FEATURES, 3),
        (Variant.V3_COMBINED, 103),
    ])
    def test_dimensions(self, segment, variant, rows):
        events, features = _spikes([0.01, 0.02])
        seq = build_sequence(segment, events, features, [], SequenceConfig(variant=variant, len_spikes=5))
        assert seq.spike_matrix.shape == (rows, 5)
        assert seq.spike_valid == 2
        assert seq.burst_matrix is None

    def test_v3_column_layout(self, segment):
        events, features = _spikes([0.01])
        seq = build_sequence(segment, events, features, [], SequenceConfig(len_spikes=3))
        column = seq.spike_matrix[:, 0]
        np.testing.assert_array_equal(column[:WAVEFORM_LENGTH], events[0].waveform)
        assert column[WAVEFORM_LENGTH:].tolist() == [100.0, 0.01, 0.0005]
        assert seq.spike_rows[-3:] == ["amplitude", "isi", "duration"]

    def test_v3_stacks_v1_over_v2(self, segment):
        events, features = _spikes([0.01, 0.02, 0.035])
        built = {
            variant: build_sequence(segment, events, features, [], SequenceConfig(variant=variant, len_spikes=5))
            for variant in (Variant.V1_WAVEFORM, Variant.V2_FEATURES, Variant.V3_COMBINED)
        }
        v3 = built[Variant.V3_COMBINED].spike_matrix
        np.testing.assert_array_equal(v3[:WAVEFORM_LENGTH], built[Variant.V1_WAVEFORM].spike_matrix)
        np.testing.assert_array_equal(v3[WAVEFORM_LENGTH:], built[Variant.V2_FEATURES].spike_matrix)
        assert len({seq.spike_valid for seq in built.values()}) == 1

    def test_truncation_keeps_earliest_spikes(self, segment):
        events, features = _spikes([0.01, 0.02, 0.03, 0.04])
        seq = build_sequence(segment, events, features, [], SequenceConfig(variant=Variant.V2_FEATURES, len_spikes=2))
        assert seq.spike_valid == 2
        assert seq.spike_matrix[0].tolist() == [100.0, 101.0]

    def test_padding_is_zero(self, segment):
        events, features = _spikes([0.01])
        seq = build_sequence(segment, events, features, [], SequenceConfig(len_spikes=4))
        assert np.all(seq.spike_matrix[:, 1:] == 0.0)

    def test_empty_segment(self, segment):
        seq = build_sequence(segment, [], [], [], SequenceConfig(len_spikes=4))
        assert seq.spike_valid == 0
        assert np.all(seq.spike_matrix == 0.0)

    def test_burst_matrix(self, segment):
        events, features = _spikes([0.01])
        bursts = [Burst(channel=0, first_spike_idx=0, n_spikes=4, duration_s=0.015, bsr=0.00375)]
        cfg = SequenceConfig(len_spikes=4, len_bursts=3, include_bursts=True)
        seq = build_sequence(segment, events, features, bursts, cfg)
        assert seq.burst_matrix.shape == (3, 3)
        assert seq.burst_valid == 1
        assert seq.burst_matrix[:, 0].tolist() == [0.015, 4.0, 0.00375]
        assert seq.burst_rows == ["burst_duration", "n_spikes_per_burst", "bsr"]

    def test_drop_features_in_config(self, segment):
        events, features = _spikes([0.01])
        cfg = SequenceConfig(len_spikes=2, drop_features=["duration"])
        seq = build_sequence(segment, events, features, [], cfg)
        assert seq.d_spike == 102
        assert "duration" not in seq.spike_rows

    def test_unknown_drop_feature_is_rejected(self):
        with pytest.raises(ValueError):
            SequenceConfig(drop_features=["colour"])


@pytest.mark.unit
class TestBinnedBaseline:
    def test_bins(self, segment):
        events, _ = _spikes([0.0105, 0.0107, 0.05])
        binned = build_binned_baseline(events, segment, SequenceConfig(variant=Variant.BASELINE_BINNED))
        assert binned.shape == (100,)
        assert np.flatnonzero(binned).tolist() == [10, 50]

    def test_sequence_shape(self, segment):
        events, features = _spikes([0.02])
        seq = build_sequence(segment, events, features, [], SequenceConfig(variant=Variant.BASELINE_BINNED))
        assert seq.spike_matrix.shape == (1, 100)
        assert seq.spike_valid == 100


@pytest.mark.unit
class TestNormalization:
    def _seqs(self):
        a = np.zeros((2, 4))
        a[:, :2] = [[1.0, 3.0], [10.0, 10.0]]
        b = np.zeros((2, 4))
        b[:, :1] = [[5.0], [10.0]]
        return [toy_sequence(a, 2, 0), toy_sequence(b, 1, 1)]

    def test_stats_use_valid_columns_only(self):
        stats = fit_norm_stats(self._seqs())
        assert stats.spike_mean.tolist() == pytest.approx([3.0, 10.0])
        assert stats.spike_std[0] == pytest.approx(np.std([1.0, 3.0, 5.0]))
        # constant row is floored, not zero
        assert stats.spike_std[1] == pytest.approx(1e-8)

    def test_padding_stays_zero(self):
        seqs = self._seqs()
        stats = fit_norm_stats(seqs)
        normed = apply_norm(seqs[0], stats)
        assert np.all(normed.spike_matrix[:, 2:] == 0.0)
        assert normed.spike_matrix[0, :2] == pytest.approx([-2.0 / stats.spike_std[0], 0.0])

    def test_inverse_restores_valid_columns(self):
        seqs = self._seqs()
        stats = fit_norm_stats(seqs)
        restored = apply_norm(apply_norm(seqs[0], stats), stats, inverse=True)
        np.testing.assert_allclose(restored.spike_matrix, seqs[0].spike_matrix, atol=1e-9)

    def test_dimension_mismatch(self):
        stats = fit_norm_stats(self._seqs())
        with pytest.raises(DataError):
            apply_norm(toy_sequence(np.zeros((3, 4)), 1, 0), stats)

    def test_empty_training_set(self):
        with pytest.raises(DataError):
            fit_norm_stats([])


@pytest.mark.unit
class TestFeatureRows:
    def test_feature_location(self):
        seq = toy_sequence(np.zeros((3, 2)), 1, 0, rows=["amplitude", "isi", "duration"])
        assert feature_location(seq, "isi") == ("spike", 1)

    def test_missing_feature(self):
        seq = toy_sequence(np.zeros((100, 2)), 1, 0, rows=[f"w{i}" for i in range(100)])
        with pytest.raises(UnsupportedVariantError):
            feature_location(seq, "duration")

    def test_handcrafted_features_include_bursts(self, segment):
        events, features = _spikes([0.01])
        seq = build_sequence(segment, events, features, [], SequenceConfig(len_spikes=2, include_bursts=True))
        assert handcrafted_features(seq) == [
            "amplitude", "isi", "duration", "burst_duration", "n_spikes_per_burst", "bsr",
        ]

    def test_handcrafted_features_of_waveform_rows(self):
        seq = toy_sequence(np.zeros((100, 2)), 1, 0, rows=[f"w{i}" for i in range(100)])
        assert handcrafted_features(seq) == []

    def test_drop_features(self):
        matrix = np.arange(6, dtype=np.float64).reshape(3, 2)
        seq = toy_sequence(matrix, 2, 0, rows=["amplitude", "isi", "duration"])
        dropped = drop_features(seq, ["isi"])
        assert dropped.spike_rows == ["amplitude", "duration"]
        assert dropped.spike_matrix.tolist() == [[0.0, 1.0], [4.0, 5.0]]
