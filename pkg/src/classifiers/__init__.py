"""
Sequence classifiers and their training loop.
"""

from .networks import CNN1DClassifier, LogisticClassifier, LSTMClassifier, SequenceClassifier, build_model
from .training import (
    compute_gradients,
    load_checkpoint,
    loss,
    predict_proba,
    save_checkpoint,
    train,
)

__all__ = [
    "CNN1DClassifier",
    "LSTMClassifier",
    "LogisticClassifier",
    "SequenceClassifier",
    "build_model",
    "compute_gradients",
    "load_checkpoint",
    "loss",
    "predict_proba",
    "save_checkpoint",
    "train",
]
