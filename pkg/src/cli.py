"""
Command-line front end.
Subcommands simulate, preprocess, train, evaluate, importance, compare and
augmentation; each reads one JSON config plus --set overrides and writes
inspectable artifacts.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from src.classifiers.training import TrainReport, load_checkpoint, save_checkpoint, train
from src.config import config_hash, configure_logging, default_jobs, load_config, save_config
from src.errors import DataError, SpikeseqError, UnsupportedVariantError
from src.evaluation.importance import feature_importance
from src.evaluation.protocol import EvaluationResult, evaluate_model, normalize_split, run_experiment
from src.evaluation.splits import manifest_from_sequences, partition_sequences, split_dataset
from src.graph.preprocess_graph import PreprocessOutcome, preprocess_dataset
from src.models.experiment import Arch, ExperimentConfig, ImportanceReport, ModelConfig
from src.models.recording import DatasetManifest
from src.models.signals import FeatureSequence, SplitSpec, Variant
from src.tools.features import export_burst_table, export_spike_table
from src.tools.io_store import (
    export_flattened,
    export_table,
    load_sequence_store,
    manifest_root,
    read_manifest,
    save_sequence_store,
)
from src.tools.sequences import apply_norm, handcrafted_features
from src.tools.synthgen import generate_dataset


logger = logging.getLogger(__name__)

COMPARE_METHODS = [Variant.BASELINE_BINNED, Variant.V1_WAVEFORM, Variant.V2_FEATURES, Variant.V3_COMBINED]
NO_FEATURE_VARIANTS = (Variant.V1_WAVEFORM, Variant.BASELINE_BINNED)


def _stamp(cfg: ExperimentConfig, rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Reproducibility columns on every emitted row."""
    digest = config_hash(cfg)
    return [{**row, "seed": cfg.seed, "config_hash": digest} for row in rows]


def _table_path(cfg: ExperimentConfig, name: str, format: str) -> Path:
    return Path(cfg.output_dir) / f"{name}.{format}"


def _split(cfg: ExperimentConfig, seqs: Sequence[FeatureSequence]) -> Tuple[List[FeatureSequence], List[FeatureSequence]]:
    train_ids, test_ids = split_dataset(manifest_from_sequences(seqs), cfg.split_plan)
    return partition_sequences(seqs, train_ids, test_ids)


def _manifest_path(cfg: ExperimentConfig, manifest: Optional[str]) -> str:
    path = manifest or cfg.manifest_path
    if path is None:
        raise DataError("no manifest given: pass --manifest or set manifest_path in the config")
    return path


def cmd_simulate(cfg: ExperimentConfig, out_dir, wells_per_class: int) -> DatasetManifest:
    manifest = generate_dataset(cfg.generator, wells_per_class, out_dir)
    labels = [int(entry.class_label) for entry in manifest.entries]
    print(
        f"{len(manifest.entries)} recordings in {out_dir} "
        f"(class A: {labels.count(0)}, class B: {labels.count(1)}, seed {cfg.seed})"
    )
    return manifest


def cmd_preprocess(
    cfg: ExperimentConfig,
    manifest_path: str,
    store_dir,
    variants: Optional[Sequence[Variant]] = None,
    jobs: int = 1,
    tables_dir=None,
    flattened: bool = False,
    format: str = "csv",
) -> Dict[Variant, Path]:
    """filter -> split -> detect -> features -> sequences, one store file per variant."""
    variants = list(variants) if variants else [cfg.sequence.variant]
    manifest = read_manifest(manifest_path)
    outcomes = preprocess_dataset(
        manifest,
        str(manifest_root(manifest_path)),
        cfg,
        variants,
        jobs=jobs,
        collect_tables=tables_dir is not None,
    )
    excluded = [o.recording_id for o in outcomes if o.excluded]
    if len(excluded) == len(outcomes):
        raise DataError("every recording was excluded as low-activity")

    written = {}
    for variant in variants:
        seqs = [seq for o in outcomes for seq in o.sequences.get(variant.value, [])]
        meta = {"config_hash": config_hash(cfg), "seed": cfg.seed, "alpha": cfg.split.alpha, "excluded": excluded}
        written[variant] = save_sequence_store(seqs, store_dir, variant, meta=meta)
        if flattened:
            export_flattened(seqs, Path(store_dir) / f"{variant.value}_flattened.csv")

    export_table(_summary_rows(cfg, outcomes), Path(store_dir) / f"preprocess_summary.{format}", format=format)
    if tables_dir is not None:
        export_spike_table([r for o in outcomes for r in o.spike_rows], Path(tables_dir) / f"spikes.{format}", format)
        export_burst_table([r for o in outcomes for r in o.burst_rows], Path(tables_dir) / f"bursts.{format}", format)
    save_config(cfg, Path(store_dir) / "config.json")
    return written


def _summary_rows(cfg: ExperimentConfig, outcomes: Sequence[PreprocessOutcome]) -> List[Dict[str, Any]]:
    return _stamp(cfg, [
        {
            "recording_id": o.recording_id,
            "n_segments": o.n_segments,
            "n_spikes": o.n_spikes,
            "n_bursts": o.n_bursts,
            "mfr_hz": o.mfr_hz,
            "excluded": o.excluded,
        }
        for o in outcomes
    ])


def cmd_train(
    cfg: ExperimentConfig, store_dir, checkpoint_path=None, format: str = "csv"
) -> Tuple[Path, TrainReport]:
    """Wellwise split, normalization fitted on train only, then training."""
    variant = Variant(cfg.sequence.variant)
    seqs = load_sequence_store(store_dir, variant)
    train_seqs, test_seqs = _split(cfg, seqs)
    train_norm, _, stats = normalize_split(train_seqs, test_seqs)
    report = train(cfg.model, train_norm)

    target = Path(checkpoint_path or Path(cfg.output_dir) / f"{variant.value}_{Arch(cfg.model.arch).value}.pt")
    extra = {
        "variant": variant.value,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "train_ids": sorted({s.parent_id for s in train_seqs}),
        "test_ids": sorted({s.parent_id for s in test_seqs}),
    }
    save_checkpoint(target, report.model, ModelConfig.model_validate(report.config), stats, extra)
    rows = report.rows() + [{"epoch": "final", "loss": None, "accuracy": report.final_train_accuracy}]
    export_table(_stamp(cfg, rows), _table_path(cfg, "train_report", format), format=format)
    return target, report


def cmd_evaluate(cfg: ExperimentConfig, checkpoint_path, store_dir, format: str = "csv") -> EvaluationResult:
    """Segment accuracy and voted recording accuracy on the held-out wells."""
    model, model_cfg, stats, extra = load_checkpoint(checkpoint_path)
    variant = Variant(extra.get("variant", cfg.sequence.variant))
    seqs = load_sequence_store(store_dir, variant)
    store_burst_dim = 0 if seqs[0].burst_matrix is None else seqs[0].burst_matrix.shape[0]
    if seqs[0].d_spike != model_cfg.input_dim or store_burst_dim != model_cfg.burst_dim:
        raise DataError(
            f"store has {seqs[0].d_spike} spike / {store_burst_dim} burst rows, checkpoint expects "
            f"{model_cfg.input_dim} / {model_cfg.burst_dim}"
        )
    _, test_seqs = _split(cfg, seqs)
    if not test_seqs:
        raise DataError("test set is empty")
    result = evaluate_model(model, [apply_norm(s, stats) for s in test_seqs])

    metrics = {"method": variant.value, "arch": Arch(model_cfg.arch).value, **result.summary()}
    export_table(_stamp(cfg, [metrics]), _table_path(cfg, "metrics", format), format=format)
    votes = [vars(vote) for vote in result.votes]
    export_table(_stamp(cfg, votes), _table_path(cfg, "recording_votes", format), format=format)
    if result.by_day:
        by_day = [{"maturation_day": day, "voted_accuracy": acc} for day, acc in result.by_day.items()]
        export_table(_stamp(cfg, by_day), _table_path(cfg, "accuracy_by_day", format), format=format)
    print(f"segment accuracy {result.segment_accuracy:.4f}, voted accuracy {result.voted_accuracy:.4f}")
    return result


def cmd_importance(cfg: ExperimentConfig, store_dir, jobs: int = 1, format: str = "csv") -> ImportanceReport:
    variant = Variant(cfg.sequence.variant)
    if variant in NO_FEATURE_VARIANTS:
        raise UnsupportedVariantError(f"{variant.value} has no handcrafted features to rank")
    seqs = load_sequence_store(store_dir, variant)
    if not seqs:
        raise DataError(f"{variant.value} store is empty")
    train_seqs, test_seqs = _split(cfg, seqs)
    features = cfg.importance_features or handcrafted_features(seqs[0])
    report = feature_importance(cfg.model, train_seqs, test_seqs, features, cfg.importance_mode, jobs=jobs)

    ranked = report.ranked()
    rows = [{"name": "all", "acc_all": ranked[0].acc_all, "acc_without": None, "importance": None}]
    rows += [row.model_dump() for row in ranked]
    rows = [{**row, "mode": report.mode.value} for row in rows]
    export_table(_stamp(cfg, rows), _table_path(cfg, "importance", format), format=format)
    return report


def cmd_compare(
    cfg: ExperimentConfig, store_dir, archs: Optional[Sequence[Arch]] = None, format: str = "csv"
) -> List[Dict[str, Any]]:
    """One row per preprocessing method, one accuracy column pair per architecture."""
    archs = [Arch(a) for a in (archs or [cfg.model.arch])]
    rows = []
    for method in COMPARE_METHODS:
        train_seqs, test_seqs = _split(cfg, load_sequence_store(store_dir, method))
        row: Dict[str, Any] = {"method": method.value}
        results: Dict[Arch, EvaluationResult] = {}
        for arch in archs:
            # the binned baseline is always a CNN
            run_arch = Arch.CNN1D if method == Variant.BASELINE_BINNED else arch
            if run_arch not in results:
                model_cfg = cfg.model.model_copy(update={"arch": run_arch})
                results[run_arch] = run_experiment(model_cfg, train_seqs, test_seqs).result
            row[f"{arch.value}_segment_accuracy"] = results[run_arch].segment_accuracy
            row[f"{arch.value}_voted_accuracy"] = results[run_arch].voted_accuracy
        rows.append(row)
    rows = _stamp(cfg, rows)
    export_table(rows, _table_path(cfg, "compare", format), format=format)
    return rows


def cmd_augmentation(
    cfg: ExperimentConfig, manifest_path: str, jobs: int = 1, format: str = "csv"
) -> List[Dict[str, Any]]:
    """Same model trained without augmentation (step = window) and with the configured step."""
    variant = Variant(cfg.sequence.variant)
    manifest = read_manifest(manifest_path)
    root = str(manifest_root(manifest_path))
    rows = []
    window = cfg.split.window_s
    for split in (SplitSpec(window_s=window, step_s=window), cfg.split):
        run_cfg = cfg.model_copy(update={"split": split})
        outcomes = preprocess_dataset(manifest, root, run_cfg, [variant], jobs=jobs)
        seqs = [seq for o in outcomes for seq in o.sequences.get(variant.value, [])]
        train_seqs, test_seqs = _split(cfg, seqs)
        result = run_experiment(cfg.model, train_seqs, test_seqs).result
        rows.append({
            "alpha": split.alpha,
            "step_s": split.step_s,
            "n_train_segments": len(train_seqs),
            "segment_accuracy": result.segment_accuracy,
            "voted_accuracy": result.voted_accuracy,
        })
    rows = _stamp(cfg, rows)
    export_table(rows, _table_path(cfg, "augmentation", format), format=format)
    return rows


class SpikeseqArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1 like configuration errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = SpikeseqArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="ExperimentConfig JSON file")
    common.add_argument(
        "--set", action="append", default=[], metavar="SECTION.FIELD=VALUE",
        help="Override any config field, e.g. --set model.lr=0.01",
    )
    common.add_argument("--seed", type=int, default=None, help="Global seed")
    common.add_argument("--log-level", default=None, help="Defaults to SPIKESEQ_LOG_LEVEL or INFO")
    common.add_argument("--format", choices=["csv", "json"], default="csv", help="Table format")

    parser = SpikeseqArgumentParser(prog="spikeseq", description="MEA recording classification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Generate a synthetic two-class dataset")
    p.add_argument("--out", required=True, help="Dataset directory")
    p.add_argument("--wells-per-class", type=int, default=2)

    variant_choices = [v.value for v in Variant]
    p = sub.add_parser("preprocess", parents=[common], help="Build sequence stores from recordings")
    p.add_argument("--manifest", default=None)
    p.add_argument("--store", default=None, help="Defaults to store_dir from the config")
    p.add_argument(
        "--variant", action="append", default=None, choices=variant_choices + ["all"],
        help="Repeatable; 'all' builds every variant",
    )
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--tables", default=None, help="Directory for per-spike and per-burst tables")
    p.add_argument("--flattened", action="store_true", help="Also export flattened sequences")

    for name, text in (
        ("train", "Train a classifier on the training wells"),
        ("evaluate", "Evaluate a checkpoint on the test wells"),
        ("importance", "Rank handcrafted features"),
        ("compare", "Compare preprocessing variants"),
        ("augmentation", "Compare no augmentation with the configured step"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        if name == "augmentation":
            p.add_argument("--manifest", default=None)
        else:
            p.add_argument("--store", default=None, help="Defaults to store_dir from the config")
        p.add_argument("--variant", default=None, choices=variant_choices)
        if name == "compare":
            p.add_argument("--arch", action="append", default=None, choices=[a.value for a in Arch])
        else:
            p.add_argument("--arch", default=None, choices=[a.value for a in Arch])
        if name == "train":
            p.add_argument("--checkpoint", default=None, help="Output checkpoint path")
        if name == "evaluate":
            p.add_argument("--checkpoint", required=True)
        if name in ("importance", "augmentation"):
            p.add_argument("--jobs", type=int, default=None)
        if name == "importance":
            p.add_argument("--mode", default=None, choices=["retrain_ablation", "permutation"])
    return parser


def _overrides(args: argparse.Namespace) -> List[str]:
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if isinstance(getattr(args, "variant", None), str):
        overrides.append(f"sequence.variant={args.variant}")
    if isinstance(getattr(args, "arch", None), str):
        overrides.append(f"model.arch={args.arch}")
    if getattr(args, "mode", None):
        overrides.append(f"importance_mode={args.mode}")
    return overrides


def _dispatch(cfg: ExperimentConfig, args: argparse.Namespace) -> None:
    jobs = getattr(args, "jobs", None) or default_jobs()
    store = getattr(args, "store", None) or cfg.store_dir
    if args.command == "simulate":
        cmd_simulate(cfg, args.out, args.wells_per_class)
    elif args.command == "preprocess":
        variants = None
        if args.variant:
            variants = list(Variant) if "all" in args.variant else [Variant(v) for v in args.variant]
        cmd_preprocess(
            cfg, _manifest_path(cfg, args.manifest), store, variants, jobs, args.tables, args.flattened, args.format
        )
    elif args.command == "train":
        cmd_train(cfg, store, args.checkpoint, args.format)
    elif args.command == "evaluate":
        cmd_evaluate(cfg, args.checkpoint, store, args.format)
    elif args.command == "importance":
        cmd_importance(cfg, store, jobs, args.format)
    elif args.command == "compare":
        cmd_compare(cfg, store, args.arch, args.format)
    elif args.command == "augmentation":
        cmd_augmentation(cfg, _manifest_path(cfg, args.manifest), jobs, args.format)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        cfg = load_config(args.config, _overrides(args))
        _dispatch(cfg, args)
    except SpikeseqError as e:
        logger.error(str(e))
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
