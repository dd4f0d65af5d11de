"""
Preprocessing Nodes
One LangGraph node per pipeline stage: load, filter, split, detect, features,
bursts and sequences. Each node returns a partial state update and records
failures in state.errors instead of raising.
"""

import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, List

from src.errors import RecordingFormatError
from src.models.recording import Recording
from src.models.signals import DetectionConfig, Segment, SpikeEvent
from src.models.state import PreprocessState, TelemetryEvent
from src.tools.dsp import bandpass_filter, estimate_noise_sigma, time_split
from src.tools.features import detect_bursts, mean_firing_rate, spike_features
from src.tools.io_store import read_recording
from src.tools.sequences import build_sequence
from src.tools.spikes import detect_spikes


logger = logging.getLogger(__name__)


class PreprocessNode:
    """Base node: runs one stage and wraps its update with tracking and telemetry."""

    node_type = "node"

    def run(self, state: PreprocessState) -> Dict[str, Any]:
        raise NotImplementedError

    def summarize(self, update: Dict[str, Any]) -> Dict[str, Any]:
        return {}

    async def execute(self, state: PreprocessState) -> Dict[str, Any]:
        start_time = time.time()
        try:
            update = self.run(state)
        except Exception as e:
            logger.error(f"{state.entry.recording_id}: {self.node_type} failed: {e}")
            return {
                "current_node": self.node_type,
                "errors": state.errors + [{
                    "node": self.node_type,
                    "error": str(e),
                    "type": type(e).__name__,
                    "timestamp": time.time(),
                }],
            }

        event = TelemetryEvent(
            name=f"{self.node_type}_completed",
            metadata={"duration_s": time.time() - start_time, **self.summarize(update)},
        )
        update.update({
            "current_node": self.node_type,
            "completed_nodes": state.completed_nodes + [self.node_type],
            "telemetry": state.telemetry + [event],
        })
        return update


class LoadNode(PreprocessNode):
    node_type = "load"

    def run(self, state: PreprocessState) -> Dict[str, Any]:
        entry = state.entry
        recording = read_recording(Path(state.root) / entry.path)
        meta = recording.meta
        if meta.recording_id != entry.recording_id or meta.class_label != entry.class_label:
            raise RecordingFormatError(
                f"{entry.path}: metadata ({meta.recording_id}, label {int(meta.class_label)}) "
                f"disagrees with manifest ({entry.recording_id}, label {int(entry.class_label)})"
            )
        if meta.maturation_day is None and entry.maturation_day is not None:
            recording = Recording(
                meta=meta.model_copy(update={"maturation_day": entry.maturation_day}),
                samples=recording.samples,
            )
        return {"recording": recording}

    def summarize(self, update: Dict[str, Any]) -> Dict[str, Any]:
        return {"n_channels": update["recording"].meta.n_channels}


class FilterNode(PreprocessNode):
    node_type = "filter"

    def run(self, state: PreprocessState) -> Dict[str, Any]:
        # the raw trace is not needed past this point
        return {"filtered": bandpass_filter(state.recording, state.config.filter), "recording": None}


class SplitNode(PreprocessNode):
    node_type = "split"

    def run(self, state: PreprocessState) -> Dict[str, Any]:
        return {"segments": time_split(state.filtered, state.config.split)}

    def summarize(self, update: Dict[str, Any]) -> Dict[str, Any]:
        return {"n_segments": len(update["segments"])}


def _channel_sigmas(samples) -> List[float]:
    return [estimate_noise_sigma(channel) for channel in samples]


def _recording_mfr(rec: Recording, detection: DetectionConfig) -> float:
    """MFR from one detection pass over the whole filtered recording."""
    whole = Segment(
        parent_id=rec.meta.recording_id,
        well_id=rec.meta.well_id,
        class_label=rec.meta.class_label,
        start_s=0.0,
        window_s=rec.meta.duration_s,
        samples=rec.samples,
        sampling_rate_hz=rec.meta.sampling_rate_hz,
    )
    counts = [0] * rec.meta.n_channels
    for event in detect_spikes(whole, detection, _channel_sigmas(rec.samples)):
        counts[event.channel] += 1
    return mean_firing_rate(counts, rec.meta.duration_s)


def _segment_mfr(segments: List[Segment], events: List[List[SpikeEvent]], n_channels: int) -> float:
    """MFR averaged over the segment detections; overlapping windows count once each."""
    if not segments:
        return 0.0
    counts = [0] * n_channels
    for seg_events in events:
        for event in seg_events:
            counts[event.channel] += 1
    return mean_firing_rate(counts, sum(seg.window_s for seg in segments))


class DetectNode(PreprocessNode):
    """Threshold detection per segment plus the recording-level firing rate."""

    node_type = "detect"

    def run(self, state: PreprocessState) -> Dict[str, Any]:
        cfg = state.config
        events = [
            detect_spikes(seg, cfg.detection, _channel_sigmas(seg.samples))
            for seg in state.segments
        ]

        rec = state.filtered
        if cfg.min_mfr_hz > 0:
            mfr = _recording_mfr(rec, cfg.detection)
        else:
            # exclusion is off, so the rate is only reported
            mfr = _segment_mfr(state.segments, events, rec.meta.n_channels)

        excluded = mfr < cfg.min_mfr_hz
        if excluded:
            logger.warning(
                f"{rec.meta.recording_id}: MFR {mfr:.3f} Hz below {cfg.min_mfr_hz} Hz, excluded"
            )
        empty = sum(1 for seg_events in events if not seg_events)
        if empty:
            logger.warning(f"{rec.meta.recording_id}: {empty} segments without spikes")
        return {"events": events, "mfr_hz": mfr, "excluded": excluded}

    def summarize(self, update: Dict[str, Any]) -> Dict[str, Any]:
        return {
            "n_spikes": sum(len(seg_events) for seg_events in update["events"]),
            "mfr_hz": update["mfr_hz"],
        }


class FeaturesNode(PreprocessNode):
    node_type = "features"

    def run(self, state: PreprocessState) -> Dict[str, Any]:
        return {
            "features": [
                spike_features(seg_events, seg.window_s, seg.sampling_rate_hz)
                for seg, seg_events in zip(state.segments, state.events)
            ]
        }


class BurstsNode(PreprocessNode):
    node_type = "bursts"

    def run(self, state: PreprocessState) -> Dict[str, Any]:
        return {"bursts": [detect_bursts(seg_events, state.config.bursts) for seg_events in state.events]}

    def summarize(self, update: Dict[str, Any]) -> Dict[str, Any]:
        return {"n_bursts": sum(len(seg_bursts) for seg_bursts in update["bursts"])}


class SequencesNode(PreprocessNode):
    """Builds one sequence per segment for every requested variant."""

    node_type = "sequences"

    def run(self, state: PreprocessState) -> Dict[str, Any]:
        if state.excluded:
            return {"sequences": {}}
        sequences = {}
        for variant in state.variants:
            seq_cfg = state.config.sequence.model_copy(update={"variant": variant})
            built = []
            for index, seg in enumerate(state.segments):
                features = state.features[index] if state.features else []
                bursts = state.bursts[index] if state.bursts else []
                built.append(build_sequence(seg, state.events[index], features, bursts, seq_cfg))
            sequences[variant.value] = built
        return {"sequences": sequences}

    def summarize(self, update: Dict[str, Any]) -> Dict[str, Any]:
        return {name: len(seqs) for name, seqs in update["sequences"].items()}


def _node_factory(node_class) -> Callable:
    def factory() -> Callable:
        node = node_class()

        async def pipeline_node(state: PreprocessState) -> Dict[str, Any]:
            return await node.execute(state)

        pipeline_node.__name__ = f"{node_class.node_type}_node"
        return pipeline_node

    return factory


create_load_node = _node_factory(LoadNode)
create_filter_node = _node_factory(FilterNode)
create_split_node = _node_factory(SplitNode)
create_detect_node = _node_factory(DetectNode)
create_features_node = _node_factory(FeaturesNode)
create_bursts_node = _node_factory(BurstsNode)
create_sequences_node = _node_factory(SequencesNode)
