"""
Train/test splitting of recordings.
Wellwise assignment by row letter or a seeded random split; every segment
of a recording lands on the same side.
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.errors import ConfigError
from src.models.experiment import SplitMode, SplitPlan
from src.models.recording import DatasetManifest, ManifestEntry, well_row
from src.models.signals import FeatureSequence


logger = logging.getLogger(__name__)


def split_dataset(manifest: DatasetManifest, plan: SplitPlan) -> Tuple[List[str], List[str]]:
    """Recording ids for training and testing, in manifest order."""
    entries = manifest.entries
    if plan.mode == SplitMode.WELLWISE:
        train_ids, test_ids = [], []
        for entry in entries:
            row = well_row(entry.well_id)
            if row in plan.train_rows:
                train_ids.append(entry.recording_id)
            elif row in plan.test_rows:
                test_ids.append(entry.recording_id)
            else:
                raise ConfigError(f"well {entry.well_id} is in neither train_rows nor test_rows")
        return train_ids, test_ids

    order = np.random.default_rng(plan.seed).permutation(len(entries))
    n_train = int(round(plan.random_frac * len(entries)))
    train_set = {entries[i].recording_id for i in order[:n_train]}
    train_ids = [e.recording_id for e in entries if e.recording_id in train_set]
    test_ids = [e.recording_id for e in entries if e.recording_id not in train_set]
    return train_ids, test_ids


def partition_sequences(
    seqs: Sequence[FeatureSequence], train_ids: Sequence[str], test_ids: Sequence[str]
) -> Tuple[List[FeatureSequence], List[FeatureSequence]]:
    train_set, test_set = set(train_ids), set(test_ids)
    train = [s for s in seqs if s.parent_id in train_set]
    test = [s for s in seqs if s.parent_id in test_set]
    logger.info(
        f"Split {len(train_ids)} train / {len(test_ids)} test recordings "
        f"({len(train)} / {len(test)} segments)"
    )
    return train, test


def manifest_from_sequences(seqs: Sequence[FeatureSequence]) -> DatasetManifest:
    """Recordings of a sequence store, in first-seen order."""
    entries: Dict[str, ManifestEntry] = {}
    for seq in seqs:
        if seq.parent_id not in entries:
            entries[seq.parent_id] = ManifestEntry(
                recording_id=seq.parent_id,
                path=seq.parent_id,
                well_id=seq.well_id,
                class_label=seq.label,
                maturation_day=seq.maturation_day,
            )
    return DatasetManifest(entries=list(entries.values()))
