"""
Feature importance
Accuracy with all features minus accuracy without feature k, either by
retraining with the row removed or by permuting the row across test segments.
"""

import logging
from dataclasses import replace
from typing import List, Sequence

import numpy as np
from joblib import Parallel, delayed

from src.classifiers.networks import SequenceClassifier
from src.classifiers.training import predict_proba
from src.errors import DataError
from src.evaluation.metrics import accuracy
from src.evaluation.protocol import run_experiment, train_and_score
from src.models.experiment import ImportanceMode, ImportanceReport, ImportanceRow, ModelConfig
from src.models.signals import FeatureSequence
from src.tools.sequences import drop_features, feature_location


logger = logging.getLogger(__name__)


def _check_features(seqs: Sequence[FeatureSequence], features: Sequence[str]) -> None:
    if not seqs:
        raise DataError("feature importance needs at least one sequence")
    for name in features:
        feature_location(seqs[0], name)


def _ablation_accuracy(
    model_cfg: ModelConfig,
    train_seqs: Sequence[FeatureSequence],
    test_seqs: Sequence[FeatureSequence],
    name: str,
) -> float:
    return train_and_score(
        model_cfg,
        [drop_features(s, [name]) for s in train_seqs],
        [drop_features(s, [name]) for s in test_seqs],
    )


def permute_feature(
    seqs: Sequence[FeatureSequence], name: str, rng: np.random.Generator
) -> List[FeatureSequence]:
    """Shuffle one feature row across segments; padding stays zero."""
    kind, row = feature_location(seqs[0], name)
    order = rng.permutation(len(seqs))
    permuted = []
    for target, source_index in zip(seqs, order):
        source = seqs[source_index]
        if kind == "spike":
            matrix = target.spike_matrix.copy()
            values = source.spike_matrix[row]
            matrix[row] = np.where(np.arange(matrix.shape[1]) < target.spike_valid, values, 0.0)
            permuted.append(replace(target, spike_matrix=matrix))
        else:
            matrix = target.burst_matrix.copy()
            values = source.burst_matrix[row]
            matrix[row] = np.where(np.arange(matrix.shape[1]) < target.burst_valid, values, 0.0)
            permuted.append(replace(target, burst_matrix=matrix))
    return permuted


def permutation_importance(
    model: SequenceClassifier,
    test_seqs: Sequence[FeatureSequence],
    features: Sequence[str],
    seed: int = 0,
) -> ImportanceReport:
    """Importance of each feature for an already trained model on normalized test sequences."""
    _check_features(test_seqs, features)
    labels = [int(s.label) for s in test_seqs]
    acc_all = accuracy((predict_proba(model, test_seqs) >= 0.5).astype(int).tolist(), labels)
    rows = []
    for name in features:
        rng = np.random.default_rng(seed)
        shuffled = permute_feature(test_seqs, name, rng)
        acc_k = accuracy((predict_proba(model, shuffled) >= 0.5).astype(int).tolist(), labels)
        rows.append(ImportanceRow.from_accuracies(name, acc_all, acc_k))
        logger.info(f"permutation {name}: acc_all={acc_all:.4f} acc_without={acc_k:.4f}")
    return ImportanceReport(mode=ImportanceMode.PERMUTATION, rows=rows)


def feature_importance(
    model_cfg: ModelConfig,
    train_seqs: Sequence[FeatureSequence],
    test_seqs: Sequence[FeatureSequence],
    features: Sequence[str],
    mode: ImportanceMode = ImportanceMode.RETRAIN_ABLATION,
    jobs: int = 1,
) -> ImportanceReport:
    """Per-feature accuracy deltas; every retrain reuses model_cfg.seed."""
    _check_features(train_seqs, features)
    mode = ImportanceMode(mode)

    if mode == ImportanceMode.PERMUTATION:
        run = run_experiment(model_cfg, train_seqs, test_seqs)
        return permutation_importance(run.report.model, run.test_seqs, features, seed=model_cfg.seed)

    acc_all = train_and_score(model_cfg, train_seqs, test_seqs)
    if jobs == 1:
        without = [_ablation_accuracy(model_cfg, train_seqs, test_seqs, name) for name in features]
    else:
        without = Parallel(n_jobs=jobs)(
            delayed(_ablation_accuracy)(model_cfg, train_seqs, test_seqs, name) for name in features
        )
    rows = []
    for name, acc_k in zip(features, without):
        rows.append(ImportanceRow.from_accuracies(name, acc_all, acc_k))
        logger.info(f"ablation {name}: acc_all={acc_all:.4f} acc_without={acc_k:.4f}")
    return ImportanceReport(mode=mode, rows=rows)
