"""
Classifier training.
Binary cross-entropy, gradient computation, seeded Adam training,
prediction and checkpoints.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from src.classifiers.networks import SequenceClassifier, build_model
from src.errors import DataError, NumericalError, StoreError
from src.models.experiment import ModelConfig
from src.models.signals import FeatureSequence, NormStats


logger = logging.getLogger(__name__)

PROB_CLAMP = 1e-7
CHECKPOINT_FORMAT = "spikeseq-checkpoint"
CHECKPOINT_VERSION = 1


def bce_loss(prob: torch.Tensor, label: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy with p clamped to [1e-7, 1 - 1e-7]."""
    p = prob.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
    return -(label * torch.log(p) + (1.0 - label) * torch.log(1.0 - p)).mean()


def loss(prob: float, label: int) -> float:
    """Scalar cross-entropy in double precision."""
    value = bce_loss(
        torch.tensor([prob], dtype=torch.float64), torch.tensor([label], dtype=torch.float64)
    )
    return float(value)


@dataclass
class SequenceBatch:
    spikes: torch.Tensor
    spike_valid: torch.Tensor
    labels: torch.Tensor
    bursts: Optional[torch.Tensor] = None
    burst_valid: Optional[torch.Tensor] = None

    def __len__(self) -> int:
        return self.spikes.shape[0]

    def subset(self, index: torch.Tensor) -> "SequenceBatch":
        return SequenceBatch(
            spikes=self.spikes[index],
            spike_valid=self.spike_valid[index],
            labels=self.labels[index],
            bursts=None if self.bursts is None else self.bursts[index],
            burst_valid=None if self.burst_valid is None else self.burst_valid[index],
        )

    def to(self, dtype: torch.dtype) -> "SequenceBatch":
        return SequenceBatch(
            spikes=self.spikes.to(dtype),
            spike_valid=self.spike_valid,
            labels=self.labels.to(dtype),
            bursts=None if self.bursts is None else self.bursts.to(dtype),
            burst_valid=self.burst_valid,
        )


def collate(seqs: Sequence[FeatureSequence], dtype: torch.dtype = torch.float32) -> SequenceBatch:
    has_bursts = seqs[0].burst_matrix is not None and seqs[0].burst_matrix.shape[0] > 0
    return SequenceBatch(
        spikes=torch.as_tensor(np.stack([s.spike_matrix for s in seqs]), dtype=dtype),
        spike_valid=torch.as_tensor([s.spike_valid for s in seqs], dtype=torch.long),
        labels=torch.as_tensor([int(s.label) for s in seqs], dtype=dtype),
        bursts=torch.as_tensor(np.stack([s.burst_matrix for s in seqs]), dtype=dtype) if has_bursts else None,
        burst_valid=torch.as_tensor([s.burst_valid for s in seqs], dtype=torch.long) if has_bursts else None,
    )


def model_config_for(seqs: Sequence[FeatureSequence], base: ModelConfig) -> ModelConfig:
    """Copy of base with input and burst dimensions taken from the data."""
    first = seqs[0]
    burst_dim = 0 if first.burst_matrix is None else first.burst_matrix.shape[0]
    return base.model_copy(update={"input_dim": first.d_spike, "burst_dim": burst_dim})


def forward(model: SequenceClassifier, batch: SequenceBatch) -> torch.Tensor:
    return model(batch.spikes, batch.spike_valid, batch.bursts, batch.burst_valid)


@dataclass
class GradientResult:
    loss: torch.Tensor
    grads: Dict[str, torch.Tensor]
    probs: torch.Tensor


def compute_gradients(
    model: SequenceClassifier, batch: SequenceBatch, loss_scale: float = 1.0
) -> GradientResult:
    """Mean batch loss and its gradient w.r.t. every parameter; left in .grad as well."""
    model.zero_grad(set_to_none=False)
    probs = forward(model, batch)
    value = bce_loss(probs, batch.labels) * loss_scale
    if not torch.isfinite(value):
        raise NumericalError(f"non-finite loss {value.item()}")
    value.backward()
    grads: Dict[str, torch.Tensor] = {}
    for name, param in model.named_parameters():
        grad = param.grad if param.grad is not None else torch.zeros_like(param)
        if not torch.all(torch.isfinite(grad)):
            raise NumericalError(f"non-finite gradient in {name}")
        grads[name] = grad.detach().clone()
    return GradientResult(loss=value.detach(), grads=grads, probs=probs.detach())


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


@dataclass
class TrainReport:
    """Outcome of one training run; model holds the final parameters."""
    epochs: List[EpochStats]
    seed: int
    config: Dict[str, Any]
    model: SequenceClassifier
    final_train_accuracy: float
    final_val_accuracy: Optional[float] = None

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"epoch": e.epoch, "loss": e.loss, "accuracy": e.accuracy, "seed": self.seed}
            for e in self.epochs
        ]


def predict_proba(
    model: SequenceClassifier, seqs: Sequence[FeatureSequence], batch_size: int = 256
) -> np.ndarray:
    if not seqs:
        return np.zeros(0)
    model.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, len(seqs), batch_size):
            batch = collate(seqs[start:start + batch_size])
            outputs.append(forward(model, batch).cpu().numpy().astype(np.float64))
    return np.concatenate(outputs)


def _accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean((probs >= 0.5).astype(int) == labels))


def train(
    model_cfg: ModelConfig,
    train_seqs: Sequence[FeatureSequence],
    val_seqs: Optional[Sequence[FeatureSequence]] = None,
) -> TrainReport:
    """Adam over seeded shuffled mini-batches; deterministic for a given seed."""
    if not train_seqs:
        raise DataError("training set is empty")
    labels = np.array([int(s.label) for s in train_seqs])
    if np.unique(labels).size < 2:
        raise DataError("training set contains a single class")

    cfg = model_config_for(train_seqs, model_cfg)
    model = build_model(cfg)
    optimizer = torch.optim.Adam(
        model.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps
    )
    generator = torch.Generator().manual_seed(cfg.seed)
    data = collate(train_seqs)
    n = len(data)

    epochs: List[EpochStats] = []
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        order = torch.randperm(n, generator=generator)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            batch = data.subset(order[start:start + cfg.batch_size])
            result = compute_gradients(model, batch)
            optimizer.step()
            total_loss += result.loss.item() * len(batch)
            correct += int(((result.probs >= 0.5).to(batch.labels.dtype) == batch.labels).sum())
        stats = EpochStats(epoch=epoch, loss=total_loss / n, accuracy=correct / n)
        if not math.isfinite(stats.loss):
            raise NumericalError(f"non-finite loss at epoch {epoch}")
        epochs.append(stats)
        logger.info(f"epoch {epoch}/{cfg.epochs} loss={stats.loss:.4f} acc={stats.accuracy:.4f}")

    final_train = _accuracy(predict_proba(model, train_seqs), labels)
    final_val = None
    if val_seqs:
        val_labels = np.array([int(s.label) for s in val_seqs])
        final_val = _accuracy(predict_proba(model, val_seqs), val_labels)
    return TrainReport(
        epochs=epochs,
        seed=cfg.seed,
        config=cfg.model_dump(mode="json"),
        model=model,
        final_train_accuracy=final_train,
        final_val_accuracy=final_val,
    )


def save_checkpoint(
    path, model: SequenceClassifier, cfg: ModelConfig, stats: Optional[NormStats] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    norm = None
    if stats is not None:
        norm = {
            key: None if value is None else torch.as_tensor(value, dtype=torch.float64)
            for key, value in vars(stats).items()
        }
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": cfg.model_dump(mode="json"),
        "state_dict": {k: v.detach().to(torch.float32).contiguous() for k, v in model.state_dict().items()},
        "norm_stats": norm,
        "extra": extra or {},
    }
    torch.save(payload, target)
    logger.info(f"Saved checkpoint {target}")
    return target


def load_checkpoint(path) -> Tuple[SequenceClassifier, ModelConfig, Optional[NormStats], Dict[str, Any]]:
    target = Path(path)
    if not target.is_file():
        raise StoreError(f"checkpoint not found: {target}")
    payload = torch.load(target, map_location="cpu", weights_only=False)
    if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
        raise StoreError(f"{target} is not a version {CHECKPOINT_VERSION} checkpoint")
    cfg = ModelConfig.model_validate(payload["config"])
    model = build_model(cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    stats = None
    if payload["norm_stats"] is not None:
        stats = NormStats(**{
            key: None if value is None else value.numpy()
            for key, value in payload["norm_stats"].items()
        })
    return model, cfg, stats, payload.get("extra", {})
