"""
Graph state for the per-recording preprocessing pipeline.
"""

from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.models.experiment import ExperimentConfig
from src.models.recording import ManifestEntry, Recording
from src.models.signals import Burst, FeatureSequence, Segment, SpikeEvent, SpikeFeatures, Variant


class TelemetryEvent(BaseModel):
    """Telemetry event for observability."""
    name: str = Field(default="unknown", description="Event name")
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Event metadata")


class PreprocessState(BaseModel):
    """Everything the preprocessing graph carries for one recording."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    # Inputs
    entry: ManifestEntry = Field(description="Manifest row of the recording")
    root: str = Field(description="Directory the manifest paths are relative to")
    config: ExperimentConfig = Field(description="Experiment configuration")
    variants: List[Variant] = Field(default_factory=lambda: [Variant.V3_COMBINED])

    # Stage outputs
    recording: Optional[Recording] = Field(default=None, description="Raw recording")
    filtered: Optional[Recording] = Field(default=None, description="Band-passed recording")
    segments: List[Segment] = Field(default_factory=list)
    events: List[List[SpikeEvent]] = Field(default_factory=list, description="Per segment")
    features: List[List[SpikeFeatures]] = Field(default_factory=list, description="Per segment")
    bursts: List[List[Burst]] = Field(default_factory=list, description="Per segment")
    sequences: Dict[str, List[FeatureSequence]] = Field(
        default_factory=dict, description="Sequences keyed by variant value"
    )
    mfr_hz: Optional[float] = Field(default=None, description="Mean firing rate of the recording")
    excluded: bool = Field(default=False, description="Dropped for low activity")

    # Observability
    telemetry: List[TelemetryEvent] = Field(default_factory=list)
    errors: List[Dict[str, Any]] = Field(default_factory=list, description="Error tracking")
    failed: bool = Field(default=False)

    # Node tracking
    current_node: Optional[str] = Field(default=None, description="Currently executing node")
    completed_nodes: List[str] = Field(default_factory=list, description="Completed nodes")

    @property
    def needs_bursts(self) -> bool:
        return self.config.sequence.include_bursts
