"""
Experiment configuration loading, overrides, hashing and logging setup.
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from src.errors import ConfigError
from src.models.experiment import ExperimentConfig


logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_LOG_LEVEL = "INFO"
# paths do not change results, so they stay out of the hash
PATH_FIELDS = {"manifest_path", "store_dir", "output_dir"}

load_dotenv()


def configure_logging(level: Optional[str] = None) -> None:
    """One stream handler on the root logger; SPIKESEQ_LOG_LEVEL is the fallback level."""
    level = (level or os.getenv("SPIKESEQ_LOG_LEVEL", DEFAULT_LOG_LEVEL)).upper()
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)


def default_jobs() -> int:
    value = os.getenv("SPIKESEQ_JOBS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(f"SPIKESEQ_JOBS must be an integer, got {value!r}")


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply "section.field=value" assignments; values are parsed as JSON when possible."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} must look like section.field=value")
        parts = key.strip().split(".")
        target = data
        for part in parts[:-1]:
            node = target.get(part)
            if not isinstance(node, dict):
                raise ConfigError(f"unknown config section {part!r} in {item!r}")
            target = node
        if parts[-1] not in target:
            raise ConfigError(f"unknown config field {key!r}")
        target[parts[-1]] = _parse_value(raw.strip())
    return data


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Read the JSON config (defaults when path is None), apply overrides and validate."""
    if path is None:
        data = ExperimentConfig().model_dump(mode="json")
    else:
        source = Path(path)
        if not source.is_file():
            raise ConfigError(f"config file not found: {source}")
        try:
            loaded = json.loads(source.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{source} is not valid JSON: {e}")
        # fill omitted sections with defaults so overrides can reach them
        try:
            data = ExperimentConfig.model_validate(loaded).model_dump(mode="json")
        except ValidationError as e:
            raise ConfigError(f"invalid config {source}: {e}")

    data = apply_overrides(data, overrides)
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}")
    warn_if_inconsistent(cfg)
    return cfg


def expected_spikes_per_window(cfg: ExperimentConfig) -> float:
    """Aggregate spike count of one window under the generator's busiest class."""
    gen = cfg.generator
    # the refractory filter keeps a Poisson train at rate / (1 + rate * refractory)
    per_channel = max(
        params.firing_rate_hz / (1.0 + params.firing_rate_hz * gen.refractory_s)
        * (1.0 + params.burst_prob * (params.burst_n_spikes - 1))
        for params in (gen.class_a, gen.class_b)
    )
    return gen.n_channels * per_channel * cfg.split.window_s


def warn_if_inconsistent(cfg: ExperimentConfig) -> None:
    expected = expected_spikes_per_window(cfg)
    if expected > cfg.sequence.len_spikes:
        logger.warning(
            f"len_spikes={cfg.sequence.len_spikes} is below the ~{expected:.0f} spikes expected "
            f"per {cfg.split.window_s:g} s window; sequences will be truncated"
        )


def config_hash(cfg: ExperimentConfig) -> str:
    """First 12 hex characters of SHA-256 over the canonical JSON dump, paths excluded."""
    canonical = json.dumps(cfg.model_dump(mode="json", exclude=PATH_FIELDS), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def save_config(cfg: ExperimentConfig, path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(cfg.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return target
