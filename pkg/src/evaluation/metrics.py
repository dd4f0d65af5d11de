"""
Accuracy and recording-level voting.
"""

from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.errors import DataError
from src.models.signals import FeatureSequence


def accuracy(preds: Sequence[int], labels: Sequence[int]) -> float:
    """Proportion of correctly classified samples."""
    if len(preds) != len(labels):
        raise DataError("preds and labels must have equal length")
    if len(preds) == 0:
        raise DataError("accuracy of an empty set is undefined")
    return float(np.mean(np.asarray(preds) == np.asarray(labels)))


def vote_recording(segment_probs: Sequence[float]) -> int:
    """Majority of per-segment labels at 0.5; ties go to the mean probability."""
    if len(segment_probs) == 0:
        raise DataError("cannot vote without segments")
    probs = np.asarray(segment_probs, dtype=np.float64)
    positive = int(np.sum(probs >= 0.5))
    negative = probs.shape[0] - positive
    if positive != negative:
        return int(positive > negative)
    return int(probs.mean() >= 0.5)


@dataclass
class RecordingVote:
    recording_id: str
    well_id: str
    label: int
    predicted: int
    n_segments: int
    maturation_day: Optional[int] = None


def vote_recordings(seqs: Sequence[FeatureSequence], probs: Sequence[float]) -> List[RecordingVote]:
    """One vote per parent recording, in first-seen order."""
    grouped: Dict[str, List[int]] = OrderedDict()
    for index, seq in enumerate(seqs):
        grouped.setdefault(seq.parent_id, []).append(index)
    votes = []
    for recording_id, indices in grouped.items():
        first = seqs[indices[0]]
        votes.append(RecordingVote(
            recording_id=recording_id,
            well_id=first.well_id,
            label=int(first.label),
            predicted=vote_recording([probs[i] for i in indices]),
            n_segments=len(indices),
            maturation_day=first.maturation_day,
        ))
    return votes


def voted_accuracy(votes: Sequence[RecordingVote]) -> float:
    return accuracy([v.predicted for v in votes], [v.label for v in votes])
