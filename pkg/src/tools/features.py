"""
Feature Tool
Handcrafted spike and burst features used for knowledge augmentation, and
the mean firing rate of a recording.
"""

import logging
from collections import defaultdict
from typing import Any, Dict, List, Sequence

import numpy as np

from src.errors import DataError
from src.models.signals import (
    PEAK_OFFSET,
    Burst,
    BurstConfig,
    Segment,
    SpikeEvent,
    SpikeFeatures,
)
from src.tools.io_store import export_table


logger = logging.getLogger(__name__)

BASELINE_SAMPLES = 20
SPIKE_TABLE_COLUMNS = [
    "parent_id", "segment_start_s", "channel", "peak_time_s", "amplitude_uV", "isi_s", "duration_s",
]
BURST_TABLE_COLUMNS = [
    "parent_id", "segment_start_s", "channel", "start_time_s", "n_spikes", "burst_duration_s", "bsr",
]


def waveform_baseline(waveform: np.ndarray) -> float:
    """Median of the pre-spike region."""
    return float(np.median(waveform[:BASELINE_SAMPLES]))


def spike_amplitude(waveform: np.ndarray) -> float:
    return float(abs(waveform[PEAK_OFFSET] - waveform_baseline(waveform)))


def spike_duration(waveform: np.ndarray, sampling_rate_hz: float) -> float:
    """Width at half amplitude, linearly interpolated, clamped to the window edges."""
    deviation = np.abs(np.asarray(waveform, dtype=np.float64) - waveform_baseline(waveform))
    half = 0.5 * deviation[PEAK_OFFSET]
    if half <= 0:
        return 0.0
    last = deviation.shape[0] - 1

    i = PEAK_OFFSET
    while i > 0 and deviation[i - 1] >= half:
        i -= 1
    if i == 0:
        t_left = 0.0
    else:
        below, above = deviation[i - 1], deviation[i]
        t_left = (i - 1) + (half - below) / (above - below)

    j = PEAK_OFFSET
    while j < last and deviation[j + 1] >= half:
        j += 1
    if j == last:
        t_right = float(last)
    else:
        above, below = deviation[j], deviation[j + 1]
        t_right = j + (above - half) / (above - below)

    return float((t_right - t_left) / sampling_rate_hz)


def inter_spike_intervals(events: Sequence[SpikeEvent], segment_end_s: float) -> List[float]:
    """Same-channel ISI per event; the last event of a channel runs to the segment end."""
    isis = [0.0] * len(events)
    last_on_channel: Dict[int, int] = {}
    for index, event in enumerate(events):
        previous = last_on_channel.get(event.channel)
        if previous is not None:
            isis[previous] = event.peak_time_s - events[previous].peak_time_s
        last_on_channel[event.channel] = index
    for index in last_on_channel.values():
        isis[index] = segment_end_s - events[index].peak_time_s
    return isis


def spike_features(
    events: Sequence[SpikeEvent], segment_end_s: float, sampling_rate_hz: float
) -> List[SpikeFeatures]:
    isis = inter_spike_intervals(events, segment_end_s)
    return [
        SpikeFeatures(
            amplitude_uV=spike_amplitude(event.waveform),
            isi_s=isi,
            duration_s=spike_duration(event.waveform, sampling_rate_hz),
        )
        for event, isi in zip(events, isis)
    ]


def detect_bursts(events: Sequence[SpikeEvent], cfg: BurstConfig) -> List[Burst]:
    """Maximal same-channel runs with every successive ISI below min_isi_s."""
    by_channel: Dict[int, List[int]] = defaultdict(list)
    for index, event in enumerate(events):
        by_channel[event.channel].append(index)

    bursts: List[Burst] = []
    for channel in sorted(by_channel):
        indices = by_channel[channel]
        run = [indices[0]]
        for current in indices[1:]:
            gap = events[current].peak_time_s - events[run[-1]].peak_time_s
            if gap < cfg.min_isi_s:
                run.append(current)
                continue
            _close_run(events, run, cfg, bursts)
            run = [current]
        _close_run(events, run, cfg, bursts)

    bursts.sort(key=lambda burst: (burst.start_time_s, burst.channel))
    return bursts


def _close_run(
    events: Sequence[SpikeEvent], run: List[int], cfg: BurstConfig, bursts: List[Burst]
) -> None:
    if len(run) < cfg.min_spikes:
        return
    start = events[run[0]].peak_time_s
    duration = events[run[-1]].peak_time_s - start
    n_spikes = len(run)
    if cfg.bsr_inverse:
        bsr = n_spikes / duration if duration > 0 else 0.0
    else:
        bsr = duration / n_spikes
    bursts.append(Burst(
        channel=events[run[0]].channel,
        first_spike_idx=run[0],
        n_spikes=n_spikes,
        duration_s=duration,
        bsr=bsr,
        start_time_s=start,
    ))


def mean_firing_rate(spike_counts: Sequence[int], duration_s: float) -> float:
    """MFR = sum(counts) / (N * T), in Hz per electrode."""
    if duration_s <= 0:
        raise DataError("duration_s must be positive")
    if len(spike_counts) == 0:
        raise DataError("need at least one electrode")
    return float(sum(spike_counts)) / (len(spike_counts) * duration_s)


def spike_table_rows(
    seg: Segment, events: Sequence[SpikeEvent], features: Sequence[SpikeFeatures]
) -> List[Dict[str, Any]]:
    return [
        {
            "parent_id": seg.parent_id,
            "segment_start_s": seg.start_s,
            "channel": event.channel,
            "peak_time_s": event.peak_time_s,
            "amplitude_uV": feature.amplitude_uV,
            "isi_s": feature.isi_s,
            "duration_s": feature.duration_s,
        }
        for event, feature in zip(events, features)
    ]


def burst_table_rows(seg: Segment, bursts: Sequence[Burst]) -> List[Dict[str, Any]]:
    return [
        {
            "parent_id": seg.parent_id,
            "segment_start_s": seg.start_s,
            "channel": burst.channel,
            "start_time_s": burst.start_time_s,
            "n_spikes": burst.n_spikes,
            "burst_duration_s": burst.duration_s,
            "bsr": burst.bsr,
        }
        for burst in bursts
    ]


def export_spike_table(rows: Sequence[Dict[str, Any]], path, format: str = "csv"):
    """One row per detected spike with its handcrafted features."""
    return export_table(rows, path, format=format, columns=SPIKE_TABLE_COLUMNS)


def export_burst_table(rows: Sequence[Dict[str, Any]], path, format: str = "csv"):
    return export_table(rows, path, format=format, columns=BURST_TABLE_COLUMNS)
