"""
Signal-processing models.
Configuration schemas for filtering, splitting, detection, bursts and sequence
building, plus the lightweight records that flow between pipeline stages.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.models.recording import ClassLabel


WAVEFORM_LENGTH = 100
PEAK_OFFSET = 50

SPIKE_FEATURES: Tuple[str, ...] = ("amplitude", "isi", "duration")
BURST_FEATURES: Tuple[str, ...] = ("burst_duration", "n_spikes_per_burst", "bsr")


class FilterSpec(BaseModel):
    """Butterworth bandpass design."""
    order: int = Field(default=4, gt=0, description="Butterworth order")
    low_cut_hz: float = Field(default=300.0, gt=0, description="Lower -3 dB cutoff")
    high_cut_hz: float = Field(default=2000.0, gt=0, description="Upper -3 dB cutoff")

    @model_validator(mode="after")
    def _check_band(self) -> "FilterSpec":
        if not self.low_cut_hz < self.high_cut_hz:
            raise ValueError("low_cut_hz must be below high_cut_hz")
        return self


class SplitSpec(BaseModel):
    """Sliding-window time split. step_s defaults to window_s (no augmentation)."""
    window_s: float = Field(default=10.0, gt=0, description="Window length in seconds")
    step_s: Optional[float] = Field(default=None, gt=0, description="Slide between window starts")

    @model_validator(mode="after")
    def _check_step(self) -> "SplitSpec":
        if self.step_s is None:
            self.step_s = self.window_s
        if self.step_s > self.window_s:
            raise ValueError("step_s must not exceed window_s")
        return self

    @property
    def alpha(self) -> float:
        """Augmentation factor: window / step."""
        return self.window_s / self.step_s


class DetectionConfig(BaseModel):
    """Threshold-crossing spike detection settings."""
    threshold_multiplier: float = Field(default=5.0, gt=0, description="Threshold in noise sigmas")
    dead_time_s: float = Field(default=0.001, ge=0, description="Suppression after a peak")
    peak_search_window_s: float = Field(default=0.001, ge=0, description="Peak search after crossing")


class BurstConfig(BaseModel):
    """Single-channel burst rule: runs of short ISIs."""
    min_isi_s: float = Field(default=0.008, gt=0, description="ISIs below this join a burst")
    min_spikes: int = Field(default=4, ge=2, description="Minimum spikes per burst")
    bsr_inverse: bool = Field(default=False, description="Report n_spikes/duration instead of duration/n_spikes")


class Variant(str, Enum):
    """Sequence representation fed to the classifiers."""
    V1_WAVEFORM = "V1_waveform"
    V2_FEATURES = "V2_features"
    V3_COMBINED = "V3_combined"
    BASELINE_BINNED = "baseline_binned"


class SequenceConfig(BaseModel):
    """Feature-sequence construction."""
    variant: Variant = Field(default=Variant.V3_COMBINED)
    len_spikes: int = Field(default=500, gt=0, description="Fixed spike sequence length")
    len_bursts: int = Field(default=50, gt=0, description="Fixed burst sequence length")
    include_bursts: bool = Field(default=False, description="Build the 3 x len_bursts burst matrix")
    bin_width_s: float = Field(default=0.001, gt=0, description="Bin width of the binary baseline")
    drop_features: List[str] = Field(default_factory=list, description="Handcrafted features to leave out")

    @field_validator("drop_features")
    @classmethod
    def _check_drop(cls, value: List[str]) -> List[str]:
        unknown = set(value) - set(SPIKE_FEATURES) - set(BURST_FEATURES)
        if unknown:
            raise ValueError(f"unknown features: {sorted(unknown)}")
        return value


class Polarity(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"


@dataclass
class Segment:
    """One time-split window of a filtered recording."""
    parent_id: str
    well_id: str
    class_label: ClassLabel
    start_s: float
    window_s: float
    samples: np.ndarray
    sampling_rate_hz: float
    maturation_day: Optional[int] = None

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass
class SpikeEvent:
    """A detected action potential, times local to its segment."""
    channel: int
    peak_index: int
    peak_time_s: float
    waveform: np.ndarray
    polarity: Polarity


@dataclass
class SpikeFeatures:
    amplitude_uV: float
    isi_s: float
    duration_s: float

    def as_row(self) -> List[float]:
        return [self.amplitude_uV, self.isi_s, self.duration_s]


@dataclass
class Burst:
    """Run of at least min_spikes spikes on one channel with sub-threshold ISIs."""
    channel: int
    first_spike_idx: int
    n_spikes: int
    duration_s: float
    bsr: float
    start_time_s: float = 0.0

    def as_row(self) -> List[float]:
        return [self.duration_s, float(self.n_spikes), self.bsr]


@dataclass
class FeatureSequence:
    """Fixed-size model input for one segment."""
    spike_matrix: np.ndarray
    spike_valid: int
    label: ClassLabel
    well_id: str
    parent_id: str
    start_s: float = 0.0
    burst_matrix: Optional[np.ndarray] = None
    burst_valid: int = 0
    spike_rows: List[str] = field(default_factory=list)
    burst_rows: List[str] = field(default_factory=list)
    maturation_day: Optional[int] = None

    @property
    def d_spike(self) -> int:
        return self.spike_matrix.shape[0]


@dataclass
class NormStats:
    """Per-dimension mean/std over training valid columns."""
    spike_mean: np.ndarray
    spike_std: np.ndarray
    burst_mean: Optional[np.ndarray] = None
    burst_std: Optional[np.ndarray] = None
