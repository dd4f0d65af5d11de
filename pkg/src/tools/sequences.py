"""
Sequence Tool
Builds fixed-size feature sequences per segment for every pipeline variant,
the binary-binned baseline, and train-only normalization.
"""

import logging
import math
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import DataError, UnsupportedVariantError
from src.models.signals import (
    BURST_FEATURES,
    SPIKE_FEATURES,
    WAVEFORM_LENGTH,
    Burst,
    FeatureSequence,
    NormStats,
    Segment,
    SequenceConfig,
    SpikeEvent,
    SpikeFeatures,
    Variant,
)


logger = logging.getLogger(__name__)

STD_FLOOR = 1e-8
BIN_ROW = "spike_bin"


def spike_row_names(variant: Variant, drop: Sequence[str] = ()) -> List[str]:
    waveform_rows = [f"w{i}" for i in range(WAVEFORM_LENGTH)]
    feature_rows = [name for name in SPIKE_FEATURES if name not in drop]
    if variant == Variant.V1_WAVEFORM:
        return waveform_rows
    if variant == Variant.V2_FEATURES:
        return feature_rows
    if variant == Variant.V3_COMBINED:
        return waveform_rows + feature_rows
    return [BIN_ROW]


def burst_row_names(cfg: SequenceConfig) -> List[str]:
    if not cfg.include_bursts or cfg.variant == Variant.BASELINE_BINNED:
        return []
    return [name for name in BURST_FEATURES if name not in cfg.drop_features]


def _spike_column(event: SpikeEvent, features: SpikeFeatures, rows: List[str]) -> np.ndarray:
    values = {
        "amplitude": features.amplitude_uV,
        "isi": features.isi_s,
        "duration": features.duration_s,
    }
    column = np.empty(len(rows), dtype=np.float64)
    n_wave = 0
    if rows and rows[0] == "w0":
        column[:WAVEFORM_LENGTH] = event.waveform
        n_wave = WAVEFORM_LENGTH
    for offset, name in enumerate(rows[n_wave:]):
        column[n_wave + offset] = values[name]
    return column


def build_sequence(
    seg: Segment,
    events: Sequence[SpikeEvent],
    features: Sequence[SpikeFeatures],
    bursts: Sequence[Burst],
    cfg: SequenceConfig,
) -> FeatureSequence:
    """Columns are spikes in time order; the earliest len_spikes are kept, the rest zero-padded."""
    if cfg.variant == Variant.BASELINE_BINNED:
        return binned_sequence(seg, events, cfg)
    if len(events) != len(features):
        raise DataError("events and features must be parallel lists")

    rows = spike_row_names(cfg.variant, cfg.drop_features)
    spike_matrix = np.zeros((len(rows), cfg.len_spikes), dtype=np.float64)
    spike_valid = min(len(events), cfg.len_spikes)
    if len(events) > cfg.len_spikes:
        logger.debug(
            f"{seg.parent_id}@{seg.start_s:g}s: truncated {len(events)} spikes to {cfg.len_spikes}"
        )
    for col in range(spike_valid):
        spike_matrix[:, col] = _spike_column(events[col], features[col], rows)

    brows = burst_row_names(cfg)
    burst_matrix: Optional[np.ndarray] = None
    burst_valid = 0
    if cfg.include_bursts:
        burst_matrix = np.zeros((len(brows), cfg.len_bursts), dtype=np.float64)
        burst_valid = min(len(bursts), cfg.len_bursts)
        for col in range(burst_valid):
            values = dict(zip(BURST_FEATURES, bursts[col].as_row()))
            burst_matrix[:, col] = [values[name] for name in brows]

    return FeatureSequence(
        spike_matrix=spike_matrix,
        spike_valid=spike_valid,
        label=seg.class_label,
        well_id=seg.well_id,
        parent_id=seg.parent_id,
        start_s=seg.start_s,
        burst_matrix=burst_matrix,
        burst_valid=burst_valid,
        spike_rows=rows,
        burst_rows=brows,
        maturation_day=seg.maturation_day,
    )


def build_binned_baseline(events: Sequence[SpikeEvent], seg: Segment, cfg: SequenceConfig) -> np.ndarray:
    """Binary train: bin b is 1 iff some spike peak lies in [b*w, (b+1)*w)."""
    width = cfg.bin_width_s
    n_bins = int(math.ceil(seg.window_s / width - 1e-9))
    binned = np.zeros(n_bins, dtype=np.float64)
    if events:
        times = np.array([event.peak_time_s for event in events])
        bins = np.floor(times / width + 1e-9).astype(np.int64)
        bins = bins[(bins >= 0) & (bins < n_bins)]
        binned[bins] = 1.0
    return binned


def binned_sequence(seg: Segment, events: Sequence[SpikeEvent], cfg: SequenceConfig) -> FeatureSequence:
    binned = build_binned_baseline(events, seg, cfg)
    return FeatureSequence(
        spike_matrix=binned[np.newaxis, :],
        spike_valid=binned.shape[0],
        label=seg.class_label,
        well_id=seg.well_id,
        parent_id=seg.parent_id,
        start_s=seg.start_s,
        spike_rows=[BIN_ROW],
        maturation_day=seg.maturation_day,
    )


def _valid_columns(matrices: Sequence[np.ndarray], valids: Sequence[int]) -> np.ndarray:
    parts = [matrix[:, :valid] for matrix, valid in zip(matrices, valids) if valid > 0]
    if not parts:
        return np.zeros((matrices[0].shape[0], 0))
    return np.concatenate(parts, axis=1)


def fit_norm_stats(train_seqs: Sequence[FeatureSequence]) -> NormStats:
    """Per-dimension mean/std over valid columns of the training sequences only."""
    if not train_seqs:
        raise DataError("cannot fit normalization on an empty training set")
    spikes = _valid_columns([s.spike_matrix for s in train_seqs], [s.spike_valid for s in train_seqs])
    if spikes.shape[1] == 0:
        raise DataError("training set has no valid spike columns")
    stats = NormStats(
        spike_mean=spikes.mean(axis=1),
        spike_std=np.maximum(spikes.std(axis=1), STD_FLOOR),
    )
    if train_seqs[0].burst_matrix is not None:
        bursts = _valid_columns(
            [s.burst_matrix for s in train_seqs], [s.burst_valid for s in train_seqs]
        )
        if bursts.shape[1] == 0:
            stats.burst_mean = np.zeros(bursts.shape[0])
            stats.burst_std = np.ones(bursts.shape[0])
        else:
            stats.burst_mean = bursts.mean(axis=1)
            stats.burst_std = np.maximum(bursts.std(axis=1), STD_FLOOR)
    return stats


def _scale(matrix: np.ndarray, valid: int, mean: np.ndarray, std: np.ndarray, inverse: bool) -> np.ndarray:
    if matrix.shape[0] != mean.shape[0]:
        raise DataError(f"dimension mismatch: matrix has {matrix.shape[0]} rows, stats {mean.shape[0]}")
    out = np.zeros_like(matrix)
    block = matrix[:, :valid]
    if inverse:
        out[:, :valid] = block * std[:, None] + mean[:, None]
    else:
        out[:, :valid] = (block - mean[:, None]) / std[:, None]
    return out


def apply_norm(seq: FeatureSequence, stats: NormStats, inverse: bool = False) -> FeatureSequence:
    """Z-score valid columns; padded columns stay exactly zero."""
    spike = _scale(seq.spike_matrix, seq.spike_valid, stats.spike_mean, stats.spike_std, inverse)
    burst = seq.burst_matrix
    if burst is not None and stats.burst_mean is not None:
        burst = _scale(burst, seq.burst_valid, stats.burst_mean, stats.burst_std, inverse)
    return replace(seq, spike_matrix=spike, burst_matrix=burst)


def feature_location(seq: FeatureSequence, name: str) -> Tuple[str, int]:
    """Which matrix and row hold a handcrafted feature."""
    if name in seq.spike_rows:
        return "spike", seq.spike_rows.index(name)
    if name in seq.burst_rows:
        return "burst", seq.burst_rows.index(name)
    raise UnsupportedVariantError(f"feature {name!r} is not present in these sequences")


def handcrafted_features(seq: FeatureSequence) -> List[str]:
    """Handcrafted feature rows present in a sequence, spike rows first."""
    present = set(seq.spike_rows) | set(seq.burst_rows)
    return [name for name in SPIKE_FEATURES + BURST_FEATURES if name in present]


def drop_features(seq: FeatureSequence, names: Sequence[str]) -> FeatureSequence:
    """Same sequence with the named feature rows removed."""
    for name in names:
        feature_location(seq, name)
    spike_keep = [i for i, row in enumerate(seq.spike_rows) if row not in names]
    burst_keep = [i for i, row in enumerate(seq.burst_rows) if row not in names]
    burst = seq.burst_matrix
    if burst is not None:
        burst = burst[burst_keep]
    return replace(
        seq,
        spike_matrix=seq.spike_matrix[spike_keep],
        burst_matrix=burst,
        spike_rows=[seq.spike_rows[i] for i in spike_keep],
        burst_rows=[seq.burst_rows[i] for i in burst_keep],
    )
