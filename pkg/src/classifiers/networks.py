"""
Sequence classifiers.
LSTM, 1-D CNN and pooled logistic models over masked feature sequences,
each ending in an affine layer and a sigmoid.
"""

from typing import Optional

import torch
import torch.nn as nn

from src.errors import DataError
from src.models.experiment import Arch, ModelConfig


def valid_mask(valid: torch.Tensor, length: int, dtype: torch.dtype) -> torch.Tensor:
    """(B, L) mask with ones on the first valid[b] columns."""
    positions = torch.arange(length, device=valid.device)
    return (positions[None, :] < valid[:, None]).to(dtype)


def masked_mean(x: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    """Mean over valid columns of (B, C, L); zero when nothing is valid."""
    mask = valid_mask(valid, x.shape[-1], x.dtype)
    total = (x * mask[:, None, :]).sum(dim=-1)
    count = valid.clamp(min=1).to(x.dtype)[:, None]
    return total / count


class SequenceClassifier(nn.Module):
    """Shared head: encoder output plus pooled burst features -> affine -> sigmoid."""

    def __init__(self, cfg: ModelConfig, rep_dim: int):
        super().__init__()
        self.cfg = cfg
        self.head = nn.Linear(rep_dim + cfg.burst_dim, 1)
        nn.init.zeros_(self.head.bias)

    def encode(self, spikes: torch.Tensor, spike_valid: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def forward(
        self,
        spikes: torch.Tensor,
        spike_valid: torch.Tensor,
        bursts: Optional[torch.Tensor] = None,
        burst_valid: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        if spikes.shape[1] != self.cfg.input_dim:
            raise DataError(
                f"input has {spikes.shape[1]} rows, model expects {self.cfg.input_dim}"
            )
        features = self.encode(spikes, spike_valid)
        if self.cfg.burst_dim:
            if bursts is None or bursts.shape[1] != self.cfg.burst_dim:
                raise DataError(f"model expects a burst matrix with {self.cfg.burst_dim} rows")
            features = torch.cat([features, masked_mean(bursts, burst_valid)], dim=1)
        return torch.sigmoid(self.head(features)).squeeze(-1)


class LSTMClassifier(SequenceClassifier):
    """Single-layer LSTM; the hidden state at the last valid column feeds the head."""

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg, cfg.hidden)
        self.lstm = nn.LSTM(cfg.input_dim, cfg.hidden, num_layers=1, batch_first=True)

    def encode(self, spikes: torch.Tensor, spike_valid: torch.Tensor) -> torch.Tensor:
        outputs, _ = self.lstm(spikes.transpose(1, 2))
        last = (spike_valid - 1).clamp(min=0)
        final = outputs[torch.arange(outputs.shape[0]), last]
        # a sequence with no spikes has no timesteps
        return final * (spike_valid > 0).to(final.dtype)[:, None]


class CNN1DClassifier(SequenceClassifier):
    """Two same-padded conv layers, masked between layers, global average pool."""

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg, cfg.cnn_channels)
        self.conv1 = nn.Conv1d(cfg.input_dim, cfg.cnn_channels, cfg.cnn_kernel, padding="same")
        self.conv2 = nn.Conv1d(cfg.cnn_channels, cfg.cnn_channels, cfg.cnn_kernel, padding="same")
        self.relu = nn.ReLU()

    def encode(self, spikes: torch.Tensor, spike_valid: torch.Tensor) -> torch.Tensor:
        mask = valid_mask(spike_valid, spikes.shape[-1], spikes.dtype)[:, None, :]
        hidden = self.relu(self.conv1(spikes * mask)) * mask
        hidden = self.relu(self.conv2(hidden))
        return masked_mean(hidden, spike_valid)


class LogisticClassifier(SequenceClassifier):
    """Per-dimension mean over valid columns."""

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg, cfg.input_dim)

    def encode(self, spikes: torch.Tensor, spike_valid: torch.Tensor) -> torch.Tensor:
        return masked_mean(spikes, spike_valid)


ARCHITECTURES = {
    Arch.LSTM: LSTMClassifier,
    Arch.CNN1D: CNN1DClassifier,
    Arch.LOGISTIC: LogisticClassifier,
}


def build_model(cfg: ModelConfig) -> SequenceClassifier:
    """Seeded construction so initial weights depend only on cfg.seed."""
    torch.manual_seed(cfg.seed)
    return ARCHITECTURES[Arch(cfg.arch)](cfg)
