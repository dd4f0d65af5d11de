"""
Recording models.
Raw multi-channel MEA recordings, their metadata and dataset manifests.
"""

import re
from enum import IntEnum
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


WELL_ID_PATTERN = re.compile(r"^[A-F][0-9]+$")


class ClassLabel(IntEnum):
    """Binary class of a recording ("Label 0"/"Label 1", Control/ALS)."""
    CLASS_A = 0
    CLASS_B = 1


def well_row(well_id: str) -> str:
    """Row letter of a well id such as "E3"."""
    return well_id[:1]


class RecordingMeta(BaseModel):
    """Metadata stored in meta.json next to data.bin."""
    recording_id: str = Field(description="Unique recording identifier")
    well_id: str = Field(description="Row letter A-F followed by column number")
    class_label: ClassLabel = Field(description="Recording class")
    sampling_rate_hz: float = Field(gt=0, description="Sampling rate in Hz")
    n_channels: int = Field(gt=0, description="Number of electrodes")
    n_samples: int = Field(gt=0, description="Samples per channel")
    duration_s: float = Field(gt=0, description="Recording duration in seconds")
    maturation_day: Optional[int] = Field(default=None, description="Days of culture maturation")
    units: Literal["microvolt"] = Field(default="microvolt", description="Voltage units")

    @field_validator("well_id")
    @classmethod
    def _check_well_id(cls, value: str) -> str:
        if not WELL_ID_PATTERN.match(value):
            raise ValueError(f"well_id {value!r} must be a row A-F followed by a column number")
        return value

    @model_validator(mode="after")
    def _check_sample_count(self) -> "RecordingMeta":
        expected = round(self.sampling_rate_hz * self.duration_s)
        if self.n_samples != expected:
            raise ValueError(
                f"n_samples={self.n_samples} does not match "
                f"round(sampling_rate_hz * duration_s)={expected}"
            )
        return self


class Recording(BaseModel):
    """Channel-major voltage trace in microvolts. Immutable once built."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    meta: RecordingMeta
    samples: np.ndarray = Field(description="float32 array, n_channels x n_samples")

    @model_validator(mode="after")
    def _check_samples(self) -> "Recording":
        samples = self.samples
        expected = (self.meta.n_channels, self.meta.n_samples)
        if samples.ndim != 2 or samples.shape != expected:
            raise ValueError(f"samples shape {samples.shape} does not match meta {expected}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        samples.setflags(write=False)
        return self


class ManifestEntry(BaseModel):
    """One recording in a dataset."""
    recording_id: str
    path: str = Field(description="Recording directory, relative to the manifest")
    well_id: str
    class_label: ClassLabel
    maturation_day: Optional[int] = None

    @field_validator("well_id")
    @classmethod
    def _check_well_id(cls, value: str) -> str:
        if not WELL_ID_PATTERN.match(value):
            raise ValueError(f"well_id {value!r} must be a row A-F followed by a column number")
        return value


class DatasetManifest(BaseModel):
    """manifest.json at the dataset root."""
    entries: List[ManifestEntry] = Field(default_factory=list)
    generator_seed: Optional[int] = None

    @model_validator(mode="after")
    def _check_unique_ids(self) -> "DatasetManifest":
        ids = [entry.recording_id for entry in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("recording_ids in manifest must be unique")
        return self
