"""
Unit tests for threshold-crossing spike detection and waveform extraction.
"""

import numpy as np
import pytest

from src.errors import DataError
from src.models.experiment import CellClassParams, GenConfig
from src.models.recording import ClassLabel
from src.models.signals import DetectionConfig, FilterSpec, PEAK_OFFSET, Polarity, WAVEFORM_LENGTH
from src.tools.dsp import bandpass_filter, estimate_noise_sigma
from src.tools.spikes import detect_spikes, extract_waveform
from src.tools.synthgen import generate_recording, make_template
from tests.conftest import FS, make_segment


def _inject(signal: np.ndarray, template: np.ndarray, peak_index: int) -> None:
    start = peak_index - PEAK_OFFSET
    signal[start:start + WAVEFORM_LENGTH] += template


@pytest.mark.unit
class TestExtractWaveform:
    def test_impulse_lands_at_peak_offset(self):
        x = np.zeros(300)
        x[100] = 1.0
        waveform = extract_waveform(x, 100)
        expected = np.zeros(WAVEFORM_LENGTH)
        expected[PEAK_OFFSET] = 1.0
        np.testing.assert_array_equal(waveform, expected)

    def test_boundaries(self):
        x = np.zeros(300)
        assert extract_waveform(x, 49) is None
        assert extract_waveform(x, 50) is not None
        assert extract_waveform(x, 249) is not None
        assert extract_waveform(x, 250) is None

    def test_template_correlates_with_extraction(self):
        rng = np.random.default_rng(4)
        template = make_template(0.0006, -200.0, FS)
        x = rng.normal(0, 20, size=2000)
        _inject(x, template, 1000)
        waveform = extract_waveform(x, 1000)
        assert np.corrcoef(waveform, template)[0, 1] >= 0.9


@pytest.mark.unit
class TestDetectSpikes:
    def test_zero_segment(self):
        seg = make_segment(np.zeros((2, 12500)))
        assert detect_spikes(seg, DetectionConfig(), [20.0, 20.0]) == []

    def test_single_injected_spike(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0, 20, size=int(FS))
        _inject(x, make_template(0.0006, -200.0, FS), int(0.5 * FS))
        events = detect_spikes(make_segment(x), DetectionConfig(), [20.0])
        assert len(events) == 1
        assert abs(events[0].peak_time_s - 0.5) <= 0.001
        assert events[0].polarity == Polarity.NEGATIVE
        assert events[0].waveform.shape == (WAVEFORM_LENGTH,)

    def test_dead_time_merges_close_spikes(self):
        x = np.zeros(int(FS))
        template = make_template(0.0006, -200.0, FS)
        _inject(x, template, 5000)
        _inject(x, template, 5000 + int(0.0005 * FS))
        events = detect_spikes(make_segment(x), DetectionConfig(), [20.0])
        assert len(events) == 1

    def test_positive_spikes_are_detected(self):
        x = np.zeros(5000)
        x[2000] = 150.0
        events = detect_spikes(make_segment(x), DetectionConfig(), [20.0])
        assert [e.peak_index for e in events] == [2000]
        assert events[0].polarity == Polarity.POSITIVE

    def test_edge_spikes_are_discarded(self):
        x = np.zeros(5000)
        x[10] = -150.0
        x[4990] = -150.0
        x[2500] = -150.0
        events = detect_spikes(make_segment(x), DetectionConfig(), [20.0])
        assert [e.peak_index for e in events] == [2500]

    def test_events_sorted_by_time_then_channel(self):
        x = np.zeros((3, 5000))
        x[2, 1000] = -150.0
        x[0, 3000] = -150.0
        x[1, 1000] = -150.0
        events = detect_spikes(make_segment(x), DetectionConfig(), [20.0] * 3)
        assert [(e.peak_index, e.channel) for e in events] == [(1000, 1), (1000, 2), (3000, 0)]

    def test_flat_channel_is_skipped(self):
        x = np.zeros((2, 5000))
        x[1, 2500] = -150.0
        events = detect_spikes(make_segment(x), DetectionConfig(), [0.0, 20.0])
        assert [e.channel for e in events] == [1]

    def test_sigma_count_must_match_channels(self):
        with pytest.raises(DataError):
            detect_spikes(make_segment(np.zeros((2, 5000))), DetectionConfig(), [20.0])

    def test_recall_and_precision_on_generated_recording(self):
        params = CellClassParams(
            template_half_width_s=0.0006, template_peak_uV=-200.0, firing_rate_hz=5.0,
        )
        cfg = GenConfig(n_channels=2, duration_s=20.0, seed=11, class_a=params)
        rec, truth = generate_recording(cfg, ClassLabel.CLASS_A, "recall")
        samples = rec.samples.astype(np.float64)
        seg = make_segment(samples)
        sigmas = [estimate_noise_sigma(channel) for channel in samples]
        events = detect_spikes(seg, DetectionConfig(), sigmas)

        matched = 0
        total = 0
        for channel, times in enumerate(truth.spike_times):
            detected = np.array([e.peak_time_s for e in events if e.channel == channel])
            for t in times:
                # template tails would be cut at the edges
                if t < 0.01 or t > cfg.duration_s - 0.01:
                    continue
                total += 1
                if detected.size and np.min(np.abs(detected - t)) <= 0.001:
                    matched += 1
        recall = matched / total
        all_truth = np.concatenate([np.asarray(times) for times in truth.spike_times])
        true_positive = sum(
            1 for e in events
            if np.min(np.abs(np.asarray(truth.spike_times[e.channel]) - e.peak_time_s)) <= 0.001
        )
        precision = true_positive / len(events)
        assert all_truth.size > 100
        assert recall >= 0.95
        assert precision >= 0.95

    def test_pure_noise_false_positive_rate(self):
        rng = np.random.default_rng(21)
        duration_s = 100.0
        samples = rng.normal(0.0, 20.0, size=(2, int(duration_s * FS)))
        sigmas = [estimate_noise_sigma(channel) for channel in samples]
        events = detect_spikes(make_segment(samples), DetectionConfig(), sigmas)
        assert len(events) / (duration_s * 2) < 0.1


@pytest.mark.unit
class TestWindowMaximum:
    def test_larger_neighbour_after_the_crossing_takes_the_peak(self):
        x = np.zeros(5000)
        x[2000] = -120.0
        x[2030] = -200.0
        events = detect_spikes(make_segment(x), DetectionConfig(), [20.0])
        assert [e.peak_index for e in events] == [2030]

    def test_smaller_follower_is_not_a_second_event(self):
        x = np.zeros(5000)
        x[2000] = -200.0
        x[2030] = 120.0
        events = detect_spikes(make_segment(x), DetectionConfig(), [20.0])
        assert [e.peak_index for e in events] == [2000]
        assert events[0].polarity == Polarity.NEGATIVE

    def test_distant_spikes_stay_separate(self):
        x = np.zeros(5000)
        x[2000] = -120.0
        x[2200] = -200.0
        events = detect_spikes(make_segment(x), DetectionConfig(), [20.0])
        assert [e.peak_index for e in events] == [2000, 2200]

    def test_peak_sample_is_the_waveform_maximum(self):
        rec, _ = generate_recording(GenConfig(n_channels=2, duration_s=10.0, seed=3), ClassLabel.CLASS_B, "wmax")
        filtered = bandpass_filter(rec, FilterSpec())
        samples = filtered.samples.astype(np.float64)
        sigmas = [estimate_noise_sigma(channel) for channel in samples]
        events = detect_spikes(make_segment(samples), DetectionConfig(), sigmas)
        assert len(events) > 50
        for event in events:
            magnitude = np.abs(event.waveform)
            assert magnitude[PEAK_OFFSET] == magnitude.max()
