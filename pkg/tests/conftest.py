"""
Shared fixtures: small synthetic datasets, segments and toy sequences.
"""

from typing import List, Optional, Sequence

import numpy as np
import pytest

from src.models.experiment import ExperimentConfig, GenConfig, ModelConfig
from src.models.recording import ClassLabel, Recording, RecordingMeta
from src.models.signals import FeatureSequence, Segment, SequenceConfig, SplitSpec
from src.tools.synthgen import generate_dataset


FS = 12500.0


def make_recording(
    samples: np.ndarray,
    recording_id: str = "rec000",
    well_id: str = "A1",
    label: ClassLabel = ClassLabel.CLASS_A,
    fs: float = FS,
    maturation_day: Optional[int] = None,
) -> Recording:
    samples = np.asarray(samples, dtype=np.float32)
    meta = RecordingMeta(
        recording_id=recording_id,
        well_id=well_id,
        class_label=label,
        sampling_rate_hz=fs,
        n_channels=samples.shape[0],
        n_samples=samples.shape[1],
        duration_s=samples.shape[1] / fs,
        maturation_day=maturation_day,
    )
    return Recording(meta=meta, samples=samples)


def make_segment(samples: np.ndarray, fs: float = FS, start_s: float = 0.0, parent_id: str = "rec000") -> Segment:
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    return Segment(
        parent_id=parent_id,
        well_id="A1",
        class_label=ClassLabel.CLASS_A,
        start_s=start_s,
        window_s=samples.shape[1] / fs,
        samples=samples,
        sampling_rate_hz=fs,
    )


def toy_sequence(
    matrix: np.ndarray,
    valid: int,
    label: int,
    parent_id: str = "rec000",
    well_id: str = "A1",
    rows: Optional[Sequence[str]] = None,
    maturation_day: Optional[int] = None,
) -> FeatureSequence:
    matrix = np.asarray(matrix, dtype=np.float64)
    return FeatureSequence(
        spike_matrix=matrix,
        spike_valid=valid,
        label=ClassLabel(label),
        well_id=well_id,
        parent_id=parent_id,
        spike_rows=list(rows) if rows is not None else [f"r{i}" for i in range(matrix.shape[0])],
        maturation_day=maturation_day,
    )


def separable_sequences(n_per_class: int = 8, length: int = 6, seed: int = 0) -> List[FeatureSequence]:
    """Two classes whose first row differs in sign; the second row is noise."""
    rng = np.random.default_rng(seed)
    seqs = []
    for index in range(n_per_class):
        for label, well in ((0, "A1"), (1, "A2")):
            valid = int(rng.integers(2, length + 1))
            matrix = np.zeros((2, length))
            matrix[0, :valid] = (1.0 if label else -1.0) + 0.1 * rng.standard_normal(valid)
            matrix[1, :valid] = rng.standard_normal(valid)
            seqs.append(toy_sequence(
                matrix, valid, label, parent_id=f"r{label}_{index}", well_id=well,
                rows=["amplitude", "duration"],
            ))
    return seqs


@pytest.fixture
def small_config(tmp_path) -> ExperimentConfig:
    """Fast end-to-end settings: two channels, 12 s recordings, 2 s windows."""
    return ExperimentConfig(
        seed=3,
        split=SplitSpec(window_s=2.0),
        sequence=SequenceConfig(len_spikes=60, len_bursts=10),
        generator=GenConfig(n_channels=2, duration_s=12.0),
        model=ModelConfig(hidden=8, cnn_channels=4, cnn_kernel=3, epochs=3, batch_size=8),
        store_dir=str(tmp_path / "store"),
        output_dir=str(tmp_path / "results"),
    )


@pytest.fixture
def small_dataset(tmp_path, small_config):
    """Four recordings: wells A1/E1 for class A and E2/A2 for class B."""
    root = tmp_path / "data"
    manifest = generate_dataset(small_config.generator, 2, root)
    return root, manifest
