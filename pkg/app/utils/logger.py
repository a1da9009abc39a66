"""
app/utils/logger.py

Structured logging for the command line. Records go to stderr so that CSV
written to stdout stays machine-readable. log_event attaches run metrics to
a record; the JSON formatter lifts them to top-level fields.
"""

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, IO, Optional

from app.utils.exceptions import ConfigurationError

LOG_FORMATS = ("json", "text")
TEXT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class JSONFormatter(logging.Formatter):
    """One JSON object per record"""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        event_fields = getattr(record, "extra_data", None)
        if event_fields:
            log_data.update(event_fields)

        # numpy scalars and paths fall back to str
        return json.dumps(log_data, default=str)


class TextFormatter(logging.Formatter):
    """Human-readable lines with event fields appended as key=value"""

    def __init__(self):
        super().__init__(TEXT_FORMAT)

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        event_fields = getattr(record, "extra_data", None)
        if event_fields:
            line += " " + " ".join(f"{key}={value}" for key, value in event_fields.items())
        return line


def setup_logger(name: str, level: str = "INFO", format_type: str = "json",
                 stream: Optional[IO[str]] = None) -> logging.Logger:
    """Attach a single stderr handler (or the given stream) to the named logger"""
    if format_type not in LOG_FORMATS:
        raise ConfigurationError(f"unknown log format {format_type!r}, expected one of {LOG_FORMATS}",
                                 key="LOG_FORMAT")
    logger = logging.getLogger(name)
    try:
        logger.setLevel(level.upper())
    except ValueError as e:
        raise ConfigurationError(f"unknown log level {level!r}", key="LOG_LEVEL") from e

    logger.handlers.clear()
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JSONFormatter() if format_type == "json" else TextFormatter())
    logger.addHandler(handler)
    logger.propagate = False

    return logger


def get_logger(name: str) -> logging.Logger:
    """Get logger instance"""
    return logging.getLogger(name)


def log_event(logger: logging.Logger, message: str, level: int = logging.INFO, **fields: Any) -> None:
    """Log message with fields carried as structured extra data"""
    logger.log(level, message, extra={"extra_data": fields})
