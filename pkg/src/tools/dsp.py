"""
DSP Tool
Butterworth bandpass filtering, robust noise estimation and sliding-window
time splitting.
"""

import logging
from typing import List

import numpy as np
from scipy.signal import butter, sosfilt

from src.errors import ConfigError, DataError
from src.models.recording import Recording
from src.models.signals import FilterSpec, Segment, SplitSpec


logger = logging.getLogger(__name__)

MAD_TO_SIGMA = 0.6745
MIN_NOISE_SAMPLES = 1000


def design_bandpass(spec: FilterSpec, sampling_rate_hz: float) -> np.ndarray:
    """Second-order sections of the bandpass, bilinear transform with pre-warping."""
    nyquist = 0.5 * sampling_rate_hz
    if spec.high_cut_hz >= nyquist:
        raise ConfigError(
            f"high cutoff {spec.high_cut_hz} Hz must be below Nyquist {nyquist} Hz"
        )
    return butter(
        spec.order,
        [spec.low_cut_hz, spec.high_cut_hz],
        btype="bandpass",
        output="sos",
        fs=sampling_rate_hz,
    )


def filter_channels(samples: np.ndarray, sampling_rate_hz: float, spec: FilterSpec) -> np.ndarray:
    """Causal single-pass filtering of every row independently."""
    sos = design_bandpass(spec, sampling_rate_hz)
    return sosfilt(sos, np.asarray(samples, dtype=np.float64), axis=-1)


def bandpass_filter(rec: Recording, spec: FilterSpec) -> Recording:
    filtered = filter_channels(rec.samples, rec.meta.sampling_rate_hz, spec)
    return Recording(meta=rec.meta, samples=filtered)


def estimate_noise_sigma(channel: np.ndarray) -> float:
    """Robust noise sigma: median absolute deviation / 0.6745."""
    values = np.asarray(channel, dtype=np.float64)
    if values.ndim != 1 or values.size < MIN_NOISE_SAMPLES:
        raise DataError(
            f"noise estimation needs a 1-D channel of at least {MIN_NOISE_SAMPLES} samples"
        )
    return float(np.median(np.abs(values - np.median(values))) / MAD_TO_SIGMA)


def segment_count(n_samples: int, window_samples: int, step_samples: int) -> int:
    if window_samples > n_samples:
        return 0
    return (n_samples - window_samples) // step_samples + 1


def time_split(rec: Recording, spec: SplitSpec) -> List[Segment]:
    """Windows start at 0, step, 2*step, ...; partial windows at the end are dropped."""
    fs = rec.meta.sampling_rate_hz
    window_samples = int(round(spec.window_s * fs))
    step_samples = int(round(spec.step_s * fs))
    n_samples = rec.meta.n_samples
    if window_samples > n_samples:
        raise DataError(
            f"window {spec.window_s} s is longer than recording {rec.meta.recording_id} "
            f"({rec.meta.duration_s} s)"
        )

    segments = []
    for k in range(segment_count(n_samples, window_samples, step_samples)):
        start = k * step_samples
        segments.append(Segment(
            parent_id=rec.meta.recording_id,
            well_id=rec.meta.well_id,
            class_label=rec.meta.class_label,
            start_s=start / fs,
            window_s=spec.window_s,
            samples=rec.samples[:, start:start + window_samples],
            sampling_rate_hz=fs,
            maturation_day=rec.meta.maturation_day,
        ))
    logger.debug(f"{rec.meta.recording_id}: {len(segments)} segments (alpha={spec.alpha:g})")
    return segments
