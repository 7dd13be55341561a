"""Structured logging configuration using structlog."""

import structlog
import logging
import sys
from typing import Any, List


def configure_logging(
    app_name: str = "rv-loopfuzz",
    version: str = "0.3.0",
    json_output: bool = True,
    log_level: str = "INFO",
    shard: int | None = None,
) -> None:
    """Configure structured logging with structlog.

    Log events go to stderr so that CLI verbs can print their results on stdout.

    Args:
        app_name: Application name for logging context
        version: Application version for logging context
        json_output: Whether to output JSON formatted logs
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        shard: Campaign shard bound into every event, if any
    """
    level = getattr(logging, log_level.upper())

    # Configure standard logging first
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=level,
    )

    timestamper = structlog.processors.TimeStamper(fmt="iso")

    shared_processors: List[Any] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        timestamper,
    ]

    if json_output:
        renderer: List[Any] = [
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer(),
        ]
    else:
        renderer = [structlog.dev.ConsoleRenderer()]

    structlog.configure(
        processors=shared_processors + renderer,
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=True,
    )

    structlog.contextvars.clear_contextvars()
    if shard is not None:
        structlog.contextvars.bind_contextvars(shard=shard)

    logger = structlog.get_logger()
    logger.info(
        "logging_initialized",
        app=app_name,
        version=version,
        json_output=json_output,
        log_level=log_level,
    )


def get_logger(name: str) -> structlog.typing.FilteringBoundLogger:
    """Get a named logger instance.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Configured structlog logger
    """
    return structlog.get_logger(name)
