"""
Train-and-evaluate protocol shared by the evaluate, compare, augmentation
and importance commands.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.classifiers.networks import SequenceClassifier
from src.classifiers.training import TrainReport, predict_proba, train
from src.evaluation.metrics import RecordingVote, accuracy, vote_recordings, voted_accuracy
from src.models.experiment import ModelConfig
from src.models.signals import FeatureSequence, NormStats
from src.tools.sequences import apply_norm, fit_norm_stats


logger = logging.getLogger(__name__)


def normalize_split(
    train_seqs: Sequence[FeatureSequence], test_seqs: Sequence[FeatureSequence]
) -> Tuple[List[FeatureSequence], List[FeatureSequence], NormStats]:
    """Fit z-score statistics on the training side and apply them to both sides."""
    stats = fit_norm_stats(train_seqs)
    return (
        [apply_norm(s, stats) for s in train_seqs],
        [apply_norm(s, stats) for s in test_seqs],
        stats,
    )


@dataclass
class EvaluationResult:
    segment_accuracy: float
    voted_accuracy: float
    votes: List[RecordingVote]
    probs: np.ndarray
    by_day: Dict[int, float] = field(default_factory=dict)

    def summary(self) -> Dict[str, float]:
        return {
            "segment_accuracy": self.segment_accuracy,
            "voted_accuracy": self.voted_accuracy,
            "n_segments": int(self.probs.shape[0]),
            "n_recordings": len(self.votes),
        }


def accuracy_by_day(votes: Sequence[RecordingVote]) -> Dict[int, float]:
    """Voted accuracy per maturation day; recordings without a day are skipped."""
    days = sorted({v.maturation_day for v in votes if v.maturation_day is not None})
    return {day: voted_accuracy([v for v in votes if v.maturation_day == day]) for day in days}


def evaluate_model(model: SequenceClassifier, test_seqs: Sequence[FeatureSequence]) -> EvaluationResult:
    """Segment accuracy, voted recording accuracy and its per-day breakdown."""
    probs = predict_proba(model, test_seqs)
    labels = [int(s.label) for s in test_seqs]
    votes = vote_recordings(test_seqs, probs)
    return EvaluationResult(
        segment_accuracy=accuracy((probs >= 0.5).astype(int).tolist(), labels),
        voted_accuracy=voted_accuracy(votes),
        votes=votes,
        probs=probs,
        by_day=accuracy_by_day(votes),
    )


@dataclass
class ExperimentRun:
    report: TrainReport
    stats: NormStats
    result: EvaluationResult
    test_seqs: List[FeatureSequence]


def run_experiment(
    model_cfg: ModelConfig,
    train_seqs: Sequence[FeatureSequence],
    test_seqs: Sequence[FeatureSequence],
) -> ExperimentRun:
    """Normalize, train on the training side, evaluate on the held-out side."""
    train_norm, test_norm, stats = normalize_split(train_seqs, test_seqs)
    report = train(model_cfg, train_norm)
    result = evaluate_model(report.model, test_norm)
    logger.info(
        f"{model_cfg.arch} segment_acc={result.segment_accuracy:.4f} "
        f"voted_acc={result.voted_accuracy:.4f}"
    )
    return ExperimentRun(report=report, stats=stats, result=result, test_seqs=test_norm)


def train_and_score(
    model_cfg: ModelConfig,
    train_seqs: Sequence[FeatureSequence],
    test_seqs: Sequence[FeatureSequence],
) -> float:
    """Segment accuracy of a freshly trained model on the test side."""
    return run_experiment(model_cfg, train_seqs, test_seqs).result.segment_accuracy
