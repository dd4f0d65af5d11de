"""
On-disk formats.
Recordings (meta.json + data.bin), dataset manifests, sequence stores and
result tables.
"""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.errors import ConfigError, RecordingFormatError, StoreError
from src.models.recording import ClassLabel, DatasetManifest, Recording, RecordingMeta
from src.models.signals import FeatureSequence, Variant


logger = logging.getLogger(__name__)

META_FILE = "meta.json"
DATA_FILE = "data.bin"
MANIFEST_FILE = "manifest.json"
SAMPLE_DTYPE = np.dtype("<f4")

PathLike = Union[str, Path]


def write_recording(rec: Recording, path: PathLike) -> None:
    """Write meta.json and channel-major little-endian float32 data.bin."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    samples = np.ascontiguousarray(rec.samples, dtype=SAMPLE_DTYPE)
    if samples.shape != (rec.meta.n_channels, rec.meta.n_samples):
        raise RecordingFormatError(f"samples shape {samples.shape} does not match meta")
    (directory / META_FILE).write_text(rec.meta.model_dump_json(indent=2), encoding="utf-8")
    (directory / DATA_FILE).write_bytes(samples.tobytes(order="C"))


def read_recording(path: PathLike) -> Recording:
    """Load a recording directory, validating sizes and values."""
    directory = Path(path)
    meta_path = directory / META_FILE
    data_path = directory / DATA_FILE
    for required in (meta_path, data_path):
        if not required.is_file():
            raise RecordingFormatError(f"missing {required}")

    try:
        meta = RecordingMeta.model_validate_json(meta_path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise RecordingFormatError(f"invalid {meta_path}: {e}") from e

    expected_bytes = SAMPLE_DTYPE.itemsize * meta.n_channels * meta.n_samples
    actual_bytes = data_path.stat().st_size
    if actual_bytes != expected_bytes:
        raise RecordingFormatError(
            f"{data_path} has {actual_bytes} bytes, expected {expected_bytes}"
        )

    samples = np.fromfile(data_path, dtype=SAMPLE_DTYPE).reshape(meta.n_channels, meta.n_samples)
    if not np.all(np.isfinite(samples)):
        raise RecordingFormatError(f"{data_path} contains non-finite values")
    return Recording(meta=meta, samples=samples)


def write_manifest(manifest: DatasetManifest, root: PathLike) -> Path:
    target = Path(root) / MANIFEST_FILE
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return target


def read_manifest(path: PathLike) -> DatasetManifest:
    """Accepts the dataset root or the manifest file itself."""
    target = Path(path)
    if target.is_dir():
        target = target / MANIFEST_FILE
    if not target.is_file():
        raise RecordingFormatError(f"manifest not found: {target}")
    try:
        return DatasetManifest.model_validate_json(target.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise RecordingFormatError(f"invalid manifest {target}: {e}") from e


def manifest_root(path: PathLike) -> Path:
    target = Path(path)
    return target if target.is_dir() else target.parent


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    return value


def export_table(
    rows: Sequence[Dict[str, Any]],
    path: PathLike,
    format: str = "csv",
    columns: Optional[List[str]] = None,
) -> Path:
    """Write homogeneous records as CSV (header, '.' decimals, LF) or a JSON array."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    records = [{key: _plain(value) for key, value in row.items()} for row in rows]
    if columns is None:
        columns = list(records[0].keys()) if records else []

    if format == "csv":
        frame = pd.DataFrame(records, columns=columns)
        frame.to_csv(target, index=False, lineterminator="\n")
    elif format == "json":
        ordered = [{key: record.get(key) for key in columns} for record in records]
        target.write_text(json.dumps(ordered, indent=2) + "\n", encoding="utf-8")
    else:
        raise ConfigError(f"unsupported table format {format!r}")
    logger.info(f"Wrote {len(records)} rows to {target}")
    return target


def export_flattened(seqs: Sequence[FeatureSequence], path: PathLike) -> Path:
    """One row per segment with the spike matrix flattened row-major into f0..f{k-1}."""
    rows = []
    for seq in seqs:
        row: Dict[str, Any] = {
            "parent_id": seq.parent_id,
            "well_id": seq.well_id,
            "label": int(seq.label),
        }
        flat = seq.spike_matrix.reshape(-1)
        row.update({f"f{i}": float(v) for i, v in enumerate(flat)})
        rows.append(row)
    return export_table(rows, path, "csv")


# Sequence store: one compressed npz per variant in the store directory.

def store_path(store_dir: PathLike, variant: Variant) -> Path:
    return Path(store_dir) / f"{Variant(variant).value}.npz"


def save_sequence_store(
    seqs: Sequence[FeatureSequence],
    store_dir: PathLike,
    variant: Variant,
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    if not seqs:
        raise StoreError("refusing to write an empty sequence store")
    target = store_path(store_dir, variant)
    target.parent.mkdir(parents=True, exist_ok=True)
    has_bursts = seqs[0].burst_matrix is not None
    arrays: Dict[str, np.ndarray] = {
        "spike": np.stack([s.spike_matrix for s in seqs]).astype(np.float32),
        "spike_valid": np.array([s.spike_valid for s in seqs], dtype=np.int64),
        "label": np.array([int(s.label) for s in seqs], dtype=np.int64),
        "well_id": np.array([s.well_id for s in seqs]),
        "parent_id": np.array([s.parent_id for s in seqs]),
        "start_s": np.array([s.start_s for s in seqs], dtype=np.float64),
        "maturation_day": np.array(
            [-1 if s.maturation_day is None else s.maturation_day for s in seqs], dtype=np.int64
        ),
        "burst_valid": np.array([s.burst_valid for s in seqs], dtype=np.int64),
    }
    if has_bursts:
        arrays["burst"] = np.stack([s.burst_matrix for s in seqs]).astype(np.float32)
    header = {
        "variant": Variant(variant).value,
        "spike_rows": seqs[0].spike_rows,
        "burst_rows": seqs[0].burst_rows,
        **(meta or {}),
    }
    arrays["header"] = np.array(json.dumps(header, sort_keys=True))
    np.savez_compressed(target, **arrays)
    logger.info(f"Stored {len(seqs)} {Variant(variant).value} sequences in {target}")
    return target


def load_sequence_store(store_dir: PathLike, variant: Variant) -> List[FeatureSequence]:
    target = store_path(store_dir, variant)
    if not target.is_file():
        raise StoreError(f"sequence store not found: {target}")
    with np.load(target, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        spike = data["spike"]
        burst = data["burst"] if "burst" in data.files else None
        columns = {key: data[key] for key in (
            "spike_valid", "label", "well_id", "parent_id", "start_s", "maturation_day", "burst_valid",
        )}
        seqs = []
        for i in range(spike.shape[0]):
            day = int(columns["maturation_day"][i])
            seqs.append(FeatureSequence(
                spike_matrix=spike[i].copy(),
                spike_valid=int(columns["spike_valid"][i]),
                label=ClassLabel(int(columns["label"][i])),
                well_id=str(columns["well_id"][i]),
                parent_id=str(columns["parent_id"][i]),
                start_s=float(columns["start_s"][i]),
                burst_matrix=None if burst is None else burst[i].copy(),
                burst_valid=int(columns["burst_valid"][i]),
                spike_rows=list(header["spike_rows"]),
                burst_rows=list(header["burst_rows"]),
                maturation_day=None if day < 0 else day,
            ))
    return seqs


def load_store_header(store_dir: PathLike, variant: Variant) -> Dict[str, Any]:
    target = store_path(store_dir, variant)
    if not target.is_file():
        raise StoreError(f"sequence store not found: {target}")
    with np.load(target, allow_pickle=False) as data:
        return json.loads(str(data["header"]))
