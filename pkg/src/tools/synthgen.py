"""
Synthetic MEA Generator
Seeded two-class recordings with Poisson spike trains, optional bursts,
biphasic templates and Gaussian noise, plus ground truth for verification.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.errors import ConfigError
from src.models.experiment import CellClassParams, GenConfig
from src.models.recording import ClassLabel, DatasetManifest, ManifestEntry, Recording, RecordingMeta
from src.models.signals import PEAK_OFFSET, WAVEFORM_LENGTH
from src.tools.io_store import write_manifest, write_recording


logger = logging.getLogger(__name__)

TRUTH_FILE = "truth.json"
FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))
REBOUND_RATIO = 0.1
# test rows E, F interleaved so every class has wells on both sides of a wellwise split
ROW_ORDER = {
    ClassLabel.CLASS_A: ["A", "E", "B", "F", "C", "D"],
    ClassLabel.CLASS_B: ["E", "A", "F", "B", "D", "C"],
}


class GroundTruth(BaseModel):
    """Per-channel spike times of a generated recording."""
    class_label: ClassLabel
    spike_times: List[List[float]] = Field(description="Seconds, one list per channel")

    def count(self) -> int:
        return sum(len(times) for times in self.spike_times)


def make_template(half_width_s: float, peak_uV: float, fs: float) -> np.ndarray:
    """Negative Gaussian lobe at index 50 followed by a broader, smaller positive rebound."""
    half_width_samples = half_width_s * fs
    if half_width_samples < 2:
        raise ConfigError(f"half-width {half_width_s} s is under 2 samples at {fs} Hz")
    sigma_main = half_width_samples / FWHM_PER_SIGMA
    sigma_rebound = 2.0 * sigma_main
    rebound_center = 3.0 * sigma_main + 2.0 * sigma_rebound
    t = np.arange(WAVEFORM_LENGTH, dtype=np.float64) - PEAK_OFFSET
    main = np.exp(-0.5 * (t / sigma_main) ** 2)
    rebound = REBOUND_RATIO * np.exp(-0.5 * ((t - rebound_center) / sigma_rebound) ** 2)
    return peak_uV * (main - rebound)


def recording_rng(seed: int, recording_id: str) -> np.random.Generator:
    """Independent stream per (seed, recording_id)."""
    digest = hashlib.sha256(recording_id.encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


def _enforce_refractory(times: np.ndarray, refractory_s: float) -> np.ndarray:
    kept: List[float] = []
    for t in times:
        if not kept or t - kept[-1] >= refractory_s:
            kept.append(float(t))
    return np.array(kept, dtype=np.float64)


def spike_train(
    params: CellClassParams, duration_s: float, refractory_s: float, rng: np.random.Generator
) -> np.ndarray:
    """Poisson events, each possibly expanded into a burst, refractory enforced."""
    if params.firing_rate_hz <= 0:
        return np.zeros(0)
    expected = params.firing_rate_hz * duration_s
    n_draw = int(expected + 10.0 * np.sqrt(expected) + 10)
    times = np.cumsum(rng.exponential(1.0 / params.firing_rate_hz, size=n_draw))
    while times[-1] < duration_s:
        more = np.cumsum(rng.exponential(1.0 / params.firing_rate_hz, size=n_draw)) + times[-1]
        times = np.concatenate([times, more])
    times = _enforce_refractory(times[times < duration_s], refractory_s)

    bursting = rng.random(times.shape[0]) < params.burst_prob
    expanded: List[np.ndarray] = []
    offsets = np.arange(params.burst_n_spikes) * params.burst_isi_s
    for t, is_burst in zip(times, bursting):
        expanded.append(t + offsets if is_burst else np.array([t]))
    if expanded:
        times = np.sort(np.concatenate(expanded))
    times = _enforce_refractory(times[times < duration_s], refractory_s)
    return times


def generate_recording(
    cfg: GenConfig,
    label: ClassLabel,
    recording_id: str = "sim",
    well_id: str = "A1",
) -> Tuple[Recording, GroundTruth]:
    label = ClassLabel(label)
    params = cfg.class_a if label == ClassLabel.CLASS_A else cfg.class_b
    fs = cfg.sampling_rate_hz
    n_samples = int(round(cfg.duration_s * fs))
    rng = recording_rng(cfg.seed, recording_id)

    samples = np.zeros((cfg.n_channels, n_samples), dtype=np.float64)
    template = make_template(params.template_half_width_s, params.template_peak_uV, fs)
    truth: List[List[float]] = []
    for channel in range(cfg.n_channels):
        scale = 1.0 + params.peak_jitter * (2.0 * rng.random() - 1.0)
        times = spike_train(params, cfg.duration_s, cfg.refractory_s, rng)
        truth.append([float(t) for t in times])
        for t in times:
            center = int(round(t * fs))
            start = center - PEAK_OFFSET
            lo, hi = max(start, 0), min(start + WAVEFORM_LENGTH, n_samples)
            samples[channel, lo:hi] += scale * template[lo - start:hi - start]
    if cfg.noise_sigma_uV > 0:
        samples += rng.normal(0.0, cfg.noise_sigma_uV, size=samples.shape)

    meta = RecordingMeta(
        recording_id=recording_id,
        well_id=well_id,
        class_label=label,
        sampling_rate_hz=fs,
        n_channels=cfg.n_channels,
        n_samples=n_samples,
        duration_s=cfg.duration_s,
    )
    recording = Recording(meta=meta, samples=samples.astype(np.float32))
    return recording, GroundTruth(class_label=label, spike_times=truth)


def assign_well(label: ClassLabel, index: int) -> str:
    """Round-robin over rows; columns keep the two classes apart."""
    order = ROW_ORDER[ClassLabel(label)]
    row = order[index % len(order)]
    column = 2 * (index // len(order)) + int(label) + 1
    return f"{row}{column}"


def generate_dataset(cfg: GenConfig, wells_per_class: int, out_dir) -> DatasetManifest:
    """Write 2 * wells_per_class recordings plus manifest.json under out_dir."""
    if wells_per_class < 1:
        raise ConfigError("wells_per_class must be at least 1")
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    entries: List[ManifestEntry] = []
    for index in range(wells_per_class):
        for label in (ClassLabel.CLASS_A, ClassLabel.CLASS_B):
            recording_id = f"rec{len(entries):03d}"
            well_id = assign_well(label, index)
            recording, truth = generate_recording(cfg, label, recording_id, well_id)
            write_recording(recording, root / recording_id)
            (root / recording_id / TRUTH_FILE).write_text(truth.model_dump_json(), encoding="utf-8")
            entries.append(ManifestEntry(
                recording_id=recording_id, path=recording_id, well_id=well_id, class_label=label,
            ))
            logger.info(
                f"Generated {recording_id} well={well_id} label={int(label)} spikes={truth.count()}"
            )

    manifest = DatasetManifest(entries=entries, generator_seed=cfg.seed)
    write_manifest(manifest, root)
    return manifest


def read_ground_truth(recording_dir) -> GroundTruth:
    path = Path(recording_dir) / TRUTH_FILE
    return GroundTruth.model_validate(json.loads(path.read_text(encoding="utf-8")))
