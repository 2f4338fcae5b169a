import logging
import sys
from typing import Optional

import structlog

from subsym.core.config import settings

_handler: Optional[logging.Handler] = None


def _add_app_context(logger, method_name, event_dict):
    event_dict.setdefault("app", settings.APP_NAME)
    return event_dict


def configure_logging(stream=None, level: Optional[str] = None) -> None:
    """Configure structured JSON logging (structlog + stdlib).

    Idempotent: each call replaces the handler installed by the previous
    one, so the latest ``stream`` and ``level`` win. The CLI passes
    ``sys.stderr`` so that stdout only carries output documents.
    """
    timestamper = structlog.processors.TimeStamper(fmt="iso")

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            _add_app_context,
            structlog.processors.format_exc_info,
            timestamper,
            structlog.processors.JSONRenderer(),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    global _handler
    root = logging.getLogger()
    if _handler is not None:
        root.removeHandler(_handler)
    _handler = logging.StreamHandler(stream or sys.stderr)
    _handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(_handler)
    root.setLevel(getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.WARNING))
