"""
Graph module for LangGraph orchestration.
"""

from .preprocess_graph import (
    create_initial_state,
    create_preprocess_graph,
    preprocess_dataset,
    preprocess_recording,
    run_preprocess_graph,
)

__all__ = [
    "create_initial_state",
    "create_preprocess_graph",
    "preprocess_dataset",
    "preprocess_recording",
    "run_preprocess_graph",
]
