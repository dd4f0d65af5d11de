"""
Evaluation protocol: splits, voting, accuracy and feature importance.
"""

from .importance import feature_importance, permutation_importance
from .metrics import accuracy, vote_recording, vote_recordings, voted_accuracy
from .protocol import evaluate_model, normalize_split, run_experiment
from .splits import partition_sequences, split_dataset

__all__ = [
    "accuracy",
    "evaluate_model",
    "feature_importance",
    "normalize_split",
    "partition_sequences",
    "permutation_importance",
    "run_experiment",
    "split_dataset",
    "vote_recording",
    "vote_recordings",
    "voted_accuracy",
]
