"""
Multi-seed trend and learnability checks on synthetic data at desk scale.
Deselected by default; run with `pytest -m slow`.
"""

from pathlib import Path

import pytest

from src.classifiers.training import train
from src.cli import cmd_compare, cmd_importance, cmd_preprocess
from src.evaluation.protocol import normalize_split
from src.models.experiment import Arch, ExperimentConfig
from src.models.signals import Variant
from src.tools.io_store import load_sequence_store
from src.tools.synthgen import generate_dataset


SEEDS = [0, 1, 2, 3, 4]


def _prepare(base, seed: int) -> ExperimentConfig:
    cfg = ExperimentConfig(
        seed=seed,
        store_dir=str(base / f"store_{seed}"),
        output_dir=str(base / f"results_{seed}"),
    )
    root = base / f"data_{seed}"
    generate_dataset(cfg.generator, 2, root)
    cmd_preprocess(cfg, str(root), cfg.store_dir, variants=list(Variant))
    return cfg


@pytest.fixture(scope="module")
def seeded_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    return [_prepare(base, seed) for seed in SEEDS]


@pytest.fixture(scope="module")
def compare_rows(seeded_runs):
    rows = []
    for cfg in seeded_runs:
        by_method = {row["method"]: row for row in cmd_compare(cfg, cfg.store_dir)}
        rows.append({method: row["lstm_segment_accuracy"] for method, row in by_method.items()})
    return rows


@pytest.mark.slow
class TestSyntheticTrends:
    def test_combined_beats_binned_baseline(self, compare_rows):
        wins = sum(
            1 for row in compare_rows
            if row["V3_combined"] >= 0.70 and row["V3_combined"] - row["baseline_binned"] >= 0.10
        )
        assert wins >= 4

    def test_variant_ordering(self, compare_rows):
        def mean(method):
            return sum(row[method] for row in compare_rows) / len(compare_rows)

        assert mean("V3_combined") >= mean("V1_waveform") - 0.02
        assert mean("V3_combined") >= mean("baseline_binned") - 0.02
        strictly_best = sum(
            1 for row in compare_rows
            if all(row["V3_combined"] > acc for method, acc in row.items() if method != "V3_combined")
        )
        assert strictly_best >= 3

    def test_duration_ranks_first_among_six_features(self, seeded_runs):
        first = []
        for cfg in seeded_runs:
            with_bursts = cfg.model_copy(update={
                "sequence": cfg.sequence.model_copy(update={"include_bursts": True}),
                "store_dir": f"{cfg.store_dir}_bursts",
            })
            root = Path(cfg.store_dir).parent / f"data_{cfg.seed}"
            cmd_preprocess(with_bursts, str(root), with_bursts.store_dir, variants=[Variant.V3_COMBINED])
            report = cmd_importance(with_bursts, with_bursts.store_dir)
            assert len(report.rows) == 6
            first.append(report.ranked()[0].name)
        assert first.count("duration") >= 4


@pytest.fixture(scope="module")
def training_store(tmp_path_factory):
    """Four wells per class at default settings, combined sequences only."""
    base = tmp_path_factory.mktemp("learnability")
    cfg = ExperimentConfig(store_dir=str(base / "store"), output_dir=str(base / "results"))
    generate_dataset(cfg.generator, 4, base / "data")
    cmd_preprocess(cfg, str(base / "data"), cfg.store_dir, variants=[Variant.V3_COMBINED])
    seqs = load_sequence_store(cfg.store_dir, Variant.V3_COMBINED)
    normed, _, _ = normalize_split(seqs, [])
    return cfg, normed


@pytest.mark.slow
class TestLearnability:
    @pytest.mark.parametrize("arch", [Arch.LSTM, Arch.CNN1D])
    def test_fits_training_segments(self, training_store, arch):
        cfg, seqs = training_store
        report = train(cfg.model.model_copy(update={"arch": arch}), seqs)
        assert len(report.epochs) == 30
        assert report.final_train_accuracy >= 0.9
