"""
Spike Detection Tool
Two-sided threshold crossing with peak search, dead time and fixed-length
waveform extraction. A peak is moved to the largest |x| of its own waveform
window, so waveform[50] always holds the window maximum.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from src.errors import DataError
from src.models.signals import (
    PEAK_OFFSET,
    WAVEFORM_LENGTH,
    DetectionConfig,
    Polarity,
    Segment,
    SpikeEvent,
)


logger = logging.getLogger(__name__)


def extract_waveform(channel_samples: np.ndarray, peak_index: int) -> Optional[np.ndarray]:
    """Samples [peak-50, peak+50) with the peak at position 50; None when out of bounds."""
    length = channel_samples.shape[0]
    if peak_index < PEAK_OFFSET or peak_index > length - (WAVEFORM_LENGTH - PEAK_OFFSET) - 1:
        return None
    start = peak_index - PEAK_OFFSET
    return np.array(channel_samples[start:start + WAVEFORM_LENGTH], dtype=np.float64)


def _window_peak(magnitude: np.ndarray, peak: int) -> Optional[int]:
    """
    Move the peak forward to the largest |x| of its waveform window.
    None when a larger sample precedes it; that spike is its own event.
    """
    while True:
        lo = max(peak - PEAK_OFFSET, 0)
        hi = min(peak + WAVEFORM_LENGTH - PEAK_OFFSET, magnitude.shape[0])
        best = lo + int(np.argmax(magnitude[lo:hi]))
        if magnitude[best] <= magnitude[peak]:
            return peak
        if best < peak:
            return None
        peak = best


def _detect_channel_peaks(
    values: np.ndarray, threshold: float, dead_samples: int, search_samples: int
) -> List[int]:
    magnitude = np.abs(values)
    above = magnitude >= threshold
    previous = np.concatenate(([False], above[:-1]))
    crossings = np.flatnonzero(above & ~previous)

    peaks: List[int] = []
    last_peak = None
    for crossing in crossings:
        if last_peak is not None and crossing <= last_peak + dead_samples:
            continue
        stop = min(crossing + search_samples + 1, magnitude.shape[0])
        peak = _window_peak(magnitude, int(crossing + np.argmax(magnitude[crossing:stop])))
        if peak is None:
            continue
        peaks.append(peak)
        last_peak = peak
    return peaks


def detect_spikes(
    seg: Segment, cfg: DetectionConfig, sigma_per_channel: Sequence[float]
) -> List[SpikeEvent]:
    """Detect spikes on every channel and merge them by (peak time, channel)."""
    if len(sigma_per_channel) != seg.n_channels:
        raise DataError(
            f"got {len(sigma_per_channel)} sigmas for {seg.n_channels} channels"
        )
    fs = seg.sampling_rate_hz
    dead_samples = int(round(cfg.dead_time_s * fs))
    search_samples = int(round(cfg.peak_search_window_s * fs))

    events: List[SpikeEvent] = []
    discarded = 0
    for channel in range(seg.n_channels):
        values = seg.samples[channel]
        sigma = float(sigma_per_channel[channel])
        if sigma <= 0:
            # a zero sigma only happens on a flat channel
            continue
        threshold = cfg.threshold_multiplier * sigma
        for peak in _detect_channel_peaks(values, threshold, dead_samples, search_samples):
            waveform = extract_waveform(values, peak)
            if waveform is None:
                discarded += 1
                continue
            polarity = Polarity.NEGATIVE if waveform[PEAK_OFFSET] < 0 else Polarity.POSITIVE
            events.append(SpikeEvent(
                channel=channel,
                peak_index=peak,
                peak_time_s=peak / fs,
                waveform=waveform,
                polarity=polarity,
            ))

    events.sort(key=lambda event: (event.peak_time_s, event.channel))
    if discarded:
        logger.debug(f"{seg.parent_id}@{seg.start_s:g}s: discarded {discarded} edge spikes")
    return events
