"""Progress events shared by the runner, the sweep and the CLI display."""

from __future__ import annotations

from typing import Any, Callable

from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

# Receives (event_name, event_data)
EventCallback = Callable[[str, dict[str, Any]], None]


def emit(on_event: EventCallback | None, event: str, data: dict[str, Any]) -> None:
    """Calls the callback if one is registered; callback errors never reach the caller."""
    if on_event is None:
        return
    try:
        on_event(event, data)
    except Exception as exc:
        logger.debug("event_callback_failed", event=event, error=str(exc))
