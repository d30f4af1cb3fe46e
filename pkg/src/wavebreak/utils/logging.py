"""structlog setup: JSON lines on stderr by default, a console renderer with --verbose."""

from __future__ import annotations

import logging
import sys

import structlog


def _stderr_logger(*args: object) -> structlog.PrintLogger:
    # Resolved per logger so a swapped sys.stderr is picked up.
    return structlog.PrintLogger(sys.stderr)


def setup_logging(verbose: bool = False) -> None:
    """Configure structlog once per process; solvers only log at run boundaries."""
    level = logging.DEBUG if verbose else logging.INFO
    renderer = (
        structlog.dev.ConsoleRenderer(colors=False)
        if verbose
        else structlog.processors.JSONRenderer(sort_keys=True)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.dev.set_exc_info,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=_stderr_logger,
        cache_logger_on_first_use=False,
    )


def bind_run(**context: object) -> None:
    """Attach run identifiers (scenario, cell) to every following log line."""
    structlog.contextvars.bind_contextvars(**context)


def clear_run() -> None:
    structlog.contextvars.clear_contextvars()


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    return structlog.get_logger(name)
