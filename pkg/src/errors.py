"""
Error types for the MEA classification pipeline.
Each family maps to one CLI exit code.
"""


class SpikeseqError(Exception):
    """Base class for all pipeline errors."""
    exit_code = 1


class ConfigError(SpikeseqError):
    """Invalid or inconsistent configuration."""
    exit_code = 1


class UnsupportedVariantError(ConfigError):
    """Requested operation is not defined for the sequence variant."""


class DataError(SpikeseqError):
    """Input data is missing, malformed or unusable."""
    exit_code = 2


class RecordingFormatError(DataError):
    """On-disk recording violates the meta.json / data.bin contract."""


class StoreError(DataError):
    """Sequence store is missing or inconsistent."""


class NumericalError(SpikeseqError):
    """Non-finite loss or gradient during training."""
    exit_code = 3
