"""
Error Handler Node
Summarizes errors raised by pipeline stages and marks the run as failed.
"""

import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List

from src.models.state import PreprocessState, TelemetryEvent


logger = logging.getLogger(__name__)


@dataclass
class ErrorHandlingResult:
    """Result from error handling."""
    errors_handled: int
    failed_nodes: List[str]
    message: str


class ErrorHandlerNode:
    """Node for handling errors in the preprocessing graph."""

    def __init__(self):
        self.node_type = "error_handler"

    def generate_message(self, recording_id: str, errors: List[Dict[str, Any]]) -> str:
        if not errors:
            return f"{recording_id}: no errors occurred during preprocessing"
        first = errors[0]
        return f"{recording_id}: {first['node']} failed with {first['type']}: {first['error']}"

    def handle(self, state: PreprocessState) -> ErrorHandlingResult:
        errors = state.errors or []
        return ErrorHandlingResult(
            errors_handled=len(errors),
            failed_nodes=[error["node"] for error in errors],
            message=self.generate_message(state.entry.recording_id, errors),
        )

    async def execute(self, state: PreprocessState) -> Dict[str, Any]:
        start_time = time.time()
        result = self.handle(state)
        logger.error(result.message)
        event = TelemetryEvent(
            name="error_handled",
            metadata={
                "errors_handled": result.errors_handled,
                "failed_nodes": result.failed_nodes,
                "handling_time": time.time() - start_time,
            },
        )
        return {
            "current_node": self.node_type,
            "completed_nodes": state.completed_nodes + [self.node_type],
            "telemetry": state.telemetry + [event],
            "failed": True,
        }


def create_error_handler_node() -> Callable:
    """Create a LangGraph-compatible node for the error handler."""
    error_handler = ErrorHandlerNode()

    async def error_handler_node(state: PreprocessState) -> Dict[str, Any]:
        return await error_handler.execute(state)

    return error_handler_node
