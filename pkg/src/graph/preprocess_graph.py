"""
Preprocessing Graph
LangGraph orchestration of load -> filter -> split -> detect -> features ->
(bursts) -> sequences for one recording, and a joblib fan-out over a manifest.
"""

import asyncio
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from joblib import Parallel, delayed
from langgraph.graph import END, StateGraph

from src.errors import (
    ConfigError,
    DataError,
    NumericalError,
    RecordingFormatError,
    StoreError,
    UnsupportedVariantError,
)
from src.models.experiment import ExperimentConfig
from src.models.recording import DatasetManifest, ManifestEntry
from src.models.signals import FeatureSequence, Variant
from src.models.state import PreprocessState
from src.nodes.error_handler import create_error_handler_node
from src.nodes.preprocess import (
    create_bursts_node,
    create_detect_node,
    create_features_node,
    create_filter_node,
    create_load_node,
    create_sequences_node,
    create_split_node,
)
from src.tools.features import burst_table_rows, spike_table_rows


logger = logging.getLogger(__name__)

ERROR_TYPES = {
    cls.__name__: cls
    for cls in (
        ConfigError, UnsupportedVariantError, DataError, RecordingFormatError, StoreError, NumericalError,
    )
}


def create_preprocess_graph():
    """Create the compiled per-recording preprocessing graph."""
    workflow = StateGraph(PreprocessState)

    workflow.add_node("load", create_load_node())
    workflow.add_node("filter", create_filter_node())
    workflow.add_node("split", create_split_node())
    workflow.add_node("detect", create_detect_node())
    workflow.add_node("features", create_features_node())
    workflow.add_node("bursts", create_bursts_node())
    workflow.add_node("sequences", create_sequences_node())
    workflow.add_node("error_handler", create_error_handler_node())

    workflow.set_entry_point("load")

    workflow.add_conditional_edges("load", _continue_to("filter"), {"filter": "filter", "error_handler": "error_handler"})
    workflow.add_conditional_edges("filter", _continue_to("split"), {"split": "split", "error_handler": "error_handler"})
    workflow.add_conditional_edges("split", _continue_to("detect"), {"detect": "detect", "error_handler": "error_handler"})
    workflow.add_conditional_edges(
        "detect",
        _should_continue_to_features,
        {"features": "features", "sequences": "sequences", "error_handler": "error_handler"},
    )
    workflow.add_conditional_edges(
        "features",
        _should_continue_to_bursts,
        {"bursts": "bursts", "sequences": "sequences", "error_handler": "error_handler"},
    )
    workflow.add_conditional_edges("bursts", _continue_to("sequences"), {"sequences": "sequences", "error_handler": "error_handler"})
    workflow.add_conditional_edges("sequences", _continue_to(END), {END: END, "error_handler": "error_handler"})

    workflow.add_edge("error_handler", END)

    return workflow.compile()


def _continue_to(next_node: str):
    def route(state: PreprocessState) -> str:
        if state.errors:
            return "error_handler"
        return next_node

    return route


def _should_continue_to_features(state: PreprocessState) -> str:
    """Excluded recordings skip feature extraction."""
    if state.errors:
        return "error_handler"
    if state.excluded:
        return "sequences"
    return "features"


def _should_continue_to_bursts(state: PreprocessState) -> str:
    if state.errors:
        return "error_handler"
    if state.needs_bursts:
        return "bursts"
    return "sequences"


def create_initial_state(
    entry: ManifestEntry,
    root: str,
    config: ExperimentConfig,
    variants: Optional[Sequence[Variant]] = None,
) -> PreprocessState:
    """Create initial state for the graph."""
    return PreprocessState(
        entry=entry,
        root=str(root),
        config=config,
        variants=list(variants) if variants else [config.sequence.variant],
    )


async def run_preprocess_graph(initial: PreprocessState, graph=None) -> PreprocessState:
    """Run the graph for one recording; a failed run raises the first recorded error."""
    graph = graph or create_preprocess_graph()
    result = await graph.ainvoke(initial)
    state = PreprocessState(**result)
    for event in state.telemetry:
        logger.debug(f"{state.entry.recording_id}: {event.name} {event.metadata}")
    if state.failed or state.errors:
        first = state.errors[0]
        error_class = ERROR_TYPES.get(first["type"], DataError)
        raise error_class(f"{state.entry.recording_id}: {first['node']}: {first['error']}")
    return state


@dataclass
class PreprocessOutcome:
    """What one recording contributes to the sequence store."""
    recording_id: str
    sequences: Dict[str, List[FeatureSequence]]
    n_segments: int
    n_spikes: int
    n_bursts: int
    mfr_hz: float
    excluded: bool
    spike_rows: List[Dict[str, Any]] = field(default_factory=list)
    burst_rows: List[Dict[str, Any]] = field(default_factory=list)


def preprocess_recording(
    entry: ManifestEntry,
    root: str,
    config: ExperimentConfig,
    variants: Optional[Sequence[Variant]] = None,
    collect_tables: bool = False,
) -> PreprocessOutcome:
    """Synchronous entry point for one recording, safe to run in a worker process."""
    state = asyncio.run(run_preprocess_graph(create_initial_state(entry, root, config, variants)))
    spike_rows: List[Dict[str, Any]] = []
    burst_rows: List[Dict[str, Any]] = []
    if collect_tables:
        for index, seg in enumerate(state.segments):
            if state.features:
                spike_rows.extend(spike_table_rows(seg, state.events[index], state.features[index]))
            if state.bursts:
                burst_rows.extend(burst_table_rows(seg, state.bursts[index]))
    outcome = PreprocessOutcome(
        recording_id=entry.recording_id,
        sequences=state.sequences,
        n_segments=len(state.segments),
        n_spikes=sum(len(events) for events in state.events),
        n_bursts=sum(len(bursts) for bursts in state.bursts),
        mfr_hz=state.mfr_hz,
        excluded=state.excluded,
        spike_rows=spike_rows,
        burst_rows=burst_rows,
    )
    logger.info(
        f"{entry.recording_id}: segments={outcome.n_segments} spikes={outcome.n_spikes} "
        f"bursts={outcome.n_bursts} mfr={outcome.mfr_hz:.3f} Hz"
    )
    return outcome


def preprocess_dataset(
    manifest: DatasetManifest,
    root: str,
    config: ExperimentConfig,
    variants: Optional[Sequence[Variant]] = None,
    jobs: int = 1,
    collect_tables: bool = False,
) -> List[PreprocessOutcome]:
    """Preprocess every manifest entry; results follow manifest order for any jobs value."""
    if jobs == 1:
        return [
            preprocess_recording(entry, root, config, variants, collect_tables)
            for entry in manifest.entries
        ]
    return Parallel(n_jobs=jobs)(
        delayed(preprocess_recording)(entry, root, config, variants, collect_tables)
        for entry in manifest.entries
    )
