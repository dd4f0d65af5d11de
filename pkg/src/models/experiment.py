"""
Experiment models.
Generator, classifier, split and importance schemas plus the single
ExperimentConfig that wires every stage together.
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from src.models.signals import (
    BURST_FEATURES,
    SPIKE_FEATURES,
    BurstConfig,
    DetectionConfig,
    FilterSpec,
    SequenceConfig,
    SplitSpec,
)


class CellClassParams(BaseModel):
    """Spike shape and firing statistics of one simulated class."""
    template_half_width_s: float = Field(gt=0, description="Half-amplitude width of the spike")
    template_peak_uV: float = Field(lt=0, description="Negative peak of the spike template")
    firing_rate_hz: float = Field(ge=0, description="Poisson rate per channel")
    burst_prob: float = Field(default=0.0, ge=0, le=1, description="Chance an event becomes a burst")
    burst_n_spikes: int = Field(default=4, ge=1)
    burst_isi_s: float = Field(default=0.005, gt=0)
    peak_jitter: float = Field(
        default=0.0, ge=0, lt=1,
        description="Per-channel peak scale drawn uniformly from [1 - jitter, 1 + jitter]",
    )


# the classes differ in spike width only; peaks sit at 8 sigma of the default noise
def default_class_a() -> CellClassParams:
    return CellClassParams(
        template_half_width_s=0.0004, template_peak_uV=-160.0, firing_rate_hz=5.0,
        burst_prob=0.08, burst_n_spikes=4, burst_isi_s=0.005, peak_jitter=0.05,
    )


def default_class_b() -> CellClassParams:
    return CellClassParams(
        template_half_width_s=0.0009, template_peak_uV=-160.0, firing_rate_hz=5.0,
        burst_prob=0.08, burst_n_spikes=4, burst_isi_s=0.005, peak_jitter=0.05,
    )


class GenConfig(BaseModel):
    """Synthetic two-class MEA generator."""
    n_channels: int = Field(default=8, gt=0)
    duration_s: float = Field(default=300.0, gt=0)
    sampling_rate_hz: float = Field(default=12500.0, gt=0)
    noise_sigma_uV: float = Field(default=20.0, ge=0)
    refractory_s: float = Field(default=0.003, ge=0)
    seed: int = 0
    class_a: CellClassParams = Field(default_factory=default_class_a)
    class_b: CellClassParams = Field(default_factory=default_class_b)


class Arch(str, Enum):
    LSTM = "lstm"
    CNN1D = "cnn1d"
    LOGISTIC = "logistic"


class ModelConfig(BaseModel):
    """Classifier and optimizer settings."""
    arch: Arch = Arch.LSTM
    input_dim: int = Field(default=103, gt=0, description="Rows of the spike matrix")
    burst_dim: int = Field(default=0, ge=0, description="Rows of the burst matrix, 0 when absent")
    hidden: int = Field(default=64, gt=0)
    cnn_channels: int = Field(default=32, gt=0)
    cnn_kernel: int = Field(default=7, gt=0)
    lr: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=32, gt=0)
    epochs: int = Field(default=30, gt=0)
    seed: int = 0
    optimizer: str = Field(default="adam", pattern="^adam$")
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class SplitMode(str, Enum):
    WELLWISE = "wellwise"
    RANDOM = "random"


class SplitPlan(BaseModel):
    """Train/test partition of recordings."""
    mode: SplitMode = SplitMode.WELLWISE
    train_rows: List[str] = Field(default_factory=lambda: ["A", "B", "C", "D"])
    test_rows: List[str] = Field(default_factory=lambda: ["E", "F"])
    random_frac: float = Field(default=0.5, gt=0, lt=1, description="Training fraction in random mode")
    seed: int = 0

    @model_validator(mode="after")
    def _check_rows(self) -> "SplitPlan":
        if self.mode == SplitMode.WELLWISE and set(self.train_rows) & set(self.test_rows):
            raise ValueError("train_rows and test_rows must be disjoint")
        return self


class ImportanceMode(str, Enum):
    RETRAIN_ABLATION = "retrain_ablation"
    PERMUTATION = "permutation"


class ImportanceRow(BaseModel):
    name: str
    acc_all: float
    acc_without: float
    importance: float

    @model_validator(mode="after")
    def _check_identity(self) -> "ImportanceRow":
        if self.importance != self.acc_all - self.acc_without:
            raise ValueError("importance must equal acc_all - acc_without")
        return self

    @classmethod
    def from_accuracies(cls, name: str, acc_all: float, acc_without: float) -> "ImportanceRow":
        return cls(name=name, acc_all=acc_all, acc_without=acc_without, importance=acc_all - acc_without)


class ImportanceReport(BaseModel):
    mode: ImportanceMode
    rows: List[ImportanceRow] = Field(default_factory=list)

    def ranked(self) -> List[ImportanceRow]:
        return sorted(self.rows, key=lambda row: (-row.importance, row.name))


ALL_IMPORTANCE_FEATURES = list(SPIKE_FEATURES + BURST_FEATURES)


class ExperimentConfig(BaseModel):
    """Everything one experiment needs; serialized as a single JSON file."""
    seed: int = Field(default=0, description="Global seed copied into every stage")
    filter: FilterSpec = Field(default_factory=FilterSpec)
    split: SplitSpec = Field(default_factory=SplitSpec)
    detection: DetectionConfig = Field(default_factory=DetectionConfig)
    bursts: BurstConfig = Field(default_factory=BurstConfig)
    sequence: SequenceConfig = Field(default_factory=SequenceConfig)
    generator: GenConfig = Field(default_factory=GenConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    split_plan: SplitPlan = Field(default_factory=SplitPlan)
    importance_mode: ImportanceMode = ImportanceMode.RETRAIN_ABLATION
    importance_features: Optional[List[str]] = Field(
        default=None, description="Features to rank; None ranks every handcrafted row in the store"
    )
    min_mfr_hz: float = Field(default=0.0, ge=0, description="Exclude recordings below this MFR")
    manifest_path: Optional[str] = None
    store_dir: str = "store"
    output_dir: str = "results"

    @model_validator(mode="after")
    def _propagate_seed(self) -> "ExperimentConfig":
        self.generator.seed = self.seed
        self.model.seed = self.seed
        self.split_plan.seed = self.seed
        unknown = set(self.importance_features or ()) - set(ALL_IMPORTANCE_FEATURES)
        if unknown:
            raise ValueError(f"unknown importance features: {sorted(unknown)}")
        return self
