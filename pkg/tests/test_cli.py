"""
End-to-end tests for the spikeseq command line.
"""

import csv

import pytest

from src.cli import main
from src.config import save_config
from src.models.signals import Variant
from src.tools.io_store import load_sequence_store, read_manifest, save_sequence_store
from tests.conftest import separable_sequences


def _read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


@pytest.fixture
def config_file(tmp_path, small_config):
    return str(save_config(small_config, tmp_path / "config.json"))


@pytest.fixture
def preprocessed(small_dataset, small_config, config_file):
    """Every variant built into the configured store."""
    root, _ = small_dataset
    code = main(["preprocess", "--config", config_file, "--manifest", str(root), "--variant", "all"])
    assert code == 0
    return small_config


@pytest.mark.integration
class TestSimulate:
    def test_writes_dataset(self, tmp_path, config_file):
        assert main(["simulate", "--config", config_file, "--out", str(tmp_path / "a"), "--wells-per-class", "2"]) == 0
        manifest = read_manifest(tmp_path / "a")
        assert len(manifest.entries) == 4

    def test_no_wells_is_a_config_error(self, tmp_path, config_file):
        assert main(["simulate", "--config", config_file, "--out", str(tmp_path / "a"), "--wells-per-class", "0"]) == 1

    def test_same_seed_same_bytes(self, tmp_path, config_file):
        for name in ("a", "b"):
            main(["simulate", "--config", config_file, "--out", str(tmp_path / name), "--wells-per-class", "1"])
        for rec_id in ("rec000", "rec001"):
            first = (tmp_path / "a" / rec_id / "data.bin").read_bytes()
            assert first == (tmp_path / "b" / rec_id / "data.bin").read_bytes()


@pytest.mark.integration
class TestPreprocess:
    def test_variant_dimensions(self, preprocessed):
        store = preprocessed.store_dir
        assert load_sequence_store(store, Variant.V1_WAVEFORM)[0].d_spike == 100
        assert load_sequence_store(store, Variant.V2_FEATURES)[0].d_spike == 3
        v3 = load_sequence_store(store, Variant.V3_COMBINED)
        assert v3[0].spike_matrix.shape == (103, 60)
        assert len(v3) == 24
        baseline = load_sequence_store(store, Variant.BASELINE_BINNED)
        assert baseline[0].spike_matrix.shape == (1, 2000)

    def test_summary_table(self, preprocessed):
        rows = _read_rows(f"{preprocessed.store_dir}/preprocess_summary.csv")
        assert [row["recording_id"] for row in rows] == ["rec000", "rec001", "rec002", "rec003"]
        assert {row["seed"] for row in rows} == {"3"}

    def test_feature_tables(self, tmp_path, small_dataset, config_file):
        root, _ = small_dataset
        tables = tmp_path / "tables"
        code = main([
            "preprocess", "--config", config_file, "--manifest", str(root),
            "--tables", str(tables), "--set", "sequence.include_bursts=true",
        ])
        assert code == 0
        assert _read_rows(tables / "spikes.csv")
        assert (tables / "bursts.csv").is_file()

    def test_missing_manifest(self, config_file):
        assert main(["preprocess", "--config", config_file]) == 2


@pytest.mark.integration
class TestTrainEvaluate:
    def test_train_then_evaluate(self, preprocessed, config_file):
        assert main(["train", "--config", config_file]) == 0
        checkpoint = f"{preprocessed.output_dir}/V3_combined_lstm.pt"
        report = _read_rows(f"{preprocessed.output_dir}/train_report.csv")
        assert [row["epoch"] for row in report] == ["1", "2", "3", "final"]

        assert main(["evaluate", "--config", config_file, "--checkpoint", checkpoint]) == 0
        metrics = _read_rows(f"{preprocessed.output_dir}/metrics.csv")[0]
        assert metrics["method"] == "V3_combined"
        assert 0.0 <= float(metrics["segment_accuracy"]) <= 1.0
        assert metrics["n_recordings"] == "2"
        votes = _read_rows(f"{preprocessed.output_dir}/recording_votes.csv")
        assert sorted(row["well_id"] for row in votes) == ["E1", "E2"]

    def test_checkpoint_store_mismatch(self, preprocessed, config_file):
        main(["train", "--config", config_file])
        save_sequence_store(separable_sequences(), preprocessed.store_dir, Variant.V3_COMBINED)
        checkpoint = f"{preprocessed.output_dir}/V3_combined_lstm.pt"
        assert main(["evaluate", "--config", config_file, "--checkpoint", checkpoint]) == 2

    def test_missing_store(self, config_file):
        assert main(["train", "--config", config_file]) == 2

    def test_tables_do_not_depend_on_output_dir(self, tmp_path, preprocessed, config_file):
        for name in ("run_a", "run_b"):
            main(["train", "--config", config_file, "--set", f'output_dir="{tmp_path / name}"'])
        first = (tmp_path / "run_a" / "train_report.csv").read_bytes()
        assert first == (tmp_path / "run_b" / "train_report.csv").read_bytes()


@pytest.mark.integration
class TestExperiments:
    def test_importance(self, preprocessed, config_file):
        assert main(["importance", "--config", config_file, "--arch", "logistic"]) == 0
        rows = _read_rows(f"{preprocessed.output_dir}/importance.csv")
        assert rows[0]["name"] == "all"
        assert sorted(row["name"] for row in rows[1:]) == ["amplitude", "duration", "isi"]
        for row in rows[1:]:
            assert float(row["importance"]) == pytest.approx(float(row["acc_all"]) - float(row["acc_without"]))
            assert row["mode"] == "retrain_ablation"

    def test_importance_ranks_burst_features(self, tmp_path, small_dataset, config_file):
        root, _ = small_dataset
        overrides = [
            "--set", "sequence.include_bursts=true",
            "--set", f'store_dir="{tmp_path / "burst_store"}"',
            "--set", f'output_dir="{tmp_path / "burst_results"}"',
        ]
        assert main(["preprocess", "--config", config_file, "--manifest", str(root), *overrides]) == 0
        assert main(["importance", "--config", config_file, "--arch", "logistic", *overrides]) == 0
        rows = _read_rows(tmp_path / "burst_results" / "importance.csv")
        assert len(rows) == 7
        assert rows[0]["name"] == "all"
        assert sorted(row["name"] for row in rows[1:]) == [
            "amplitude", "bsr", "burst_duration", "duration", "isi", "n_spikes_per_burst",
        ]

    def test_importance_needs_features(self, preprocessed, config_file):
        assert main(["importance", "--config", config_file, "--variant", "V1_waveform"]) == 1

    def test_compare(self, preprocessed, config_file):
        assert main(["compare", "--config", config_file, "--arch", "logistic"]) == 0
        rows = _read_rows(f"{preprocessed.output_dir}/compare.csv")
        assert [row["method"] for row in rows] == ["baseline_binned", "V1_waveform", "V2_features", "V3_combined"]
        assert "logistic_voted_accuracy" in rows[0]

    @pytest.mark.slow
    def test_augmentation(self, small_dataset, config_file, small_config):
        root, _ = small_dataset
        code = main(["augmentation", "--config", config_file, "--manifest", str(root), "--set", "split.step_s=1.0"])
        assert code == 0
        rows = _read_rows(f"{small_config.output_dir}/augmentation.csv")
        assert [float(row["alpha"]) for row in rows] == [1.0, 2.0]
        assert int(rows[1]["n_train_segments"]) > int(rows[0]["n_train_segments"])


@pytest.mark.unit
class TestUsageErrors:
    def test_bad_override(self, config_file):
        assert main(["train", "--config", config_file, "--set", "model.colour=1"]) == 1

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["explode"])
        assert excinfo.value.code == 1
