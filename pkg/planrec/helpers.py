import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import structlog
from dotenv import load_dotenv

load_dotenv()

PACKAGE_DIR = Path(__file__).resolve().parent

ENV_CONFIG = {
    "PLANREC_THRESHOLD_DIRECT": ("threshold_direct", float),
    "PLANREC_THRESHOLD_INDIRECT": ("threshold_indirect", float),
    "PLANREC_ICNORM": ("icnorm_mode", str),
    "PLANREC_INDIRECT": ("indirect_mode", str),
}


def bundled_path(*parts: str) -> Path:
    """Location of a file shipped inside the package (``kb/``, ``transcripts/``)."""
    return PACKAGE_DIR.joinpath(*parts)


def env_overrides() -> Dict[str, Any]:
    """
    EngineConfig overrides selected by env-vars (a ``.env`` file is honoured).
    Unset or empty variables are skipped so the knowledge-base values stand.
    """
    overrides: Dict[str, Any] = {}
    for variable, (field_name, cast) in ENV_CONFIG.items():
        raw = os.getenv(variable)
        if raw is None or raw.strip() == "":
            continue
        try:
            overrides[field_name] = cast(raw.strip())
        except ValueError:
            raise ValueError(f"{variable}={raw!r} is not a valid {cast.__name__}")
    return overrides


def configure_logging(level: Optional[str] = None, fmt: Optional[str] = None) -> None:
    """Route structlog output to stderr so documents on stdout stay clean."""
    level = (level or os.getenv("PLANREC_LOG_LEVEL", "warning")).upper()
    fmt = (fmt or os.getenv("PLANREC_LOG_FORMAT", "console")).lower()

    renderer = (
        structlog.processors.JSONRenderer(sort_keys=True)
        if fmt == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            getattr(logging, level, logging.WARNING)
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
