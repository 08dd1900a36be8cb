# fracbec/infrastructure/utils.py
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.logging import RichHandler

OUTPUT_DIR_ENV = "FRACBEC_OUTPUT_DIR"

LOG_LEVELS = {-1: logging.WARNING, 0: logging.INFO, 1: logging.DEBUG}


def setup_logging(verbosity: int = 0) -> None:
    """Routes the package logger through rich on stderr; -q gives WARNING, -v gives DEBUG."""
    level = LOG_LEVELS[max(-1, min(1, verbosity))]
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False)
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger = logging.getLogger("fracbec")
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False


def canonical_json(document: Any) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(document: dict[str, Any]) -> str:
    """SHA-256 of the sorted-key JSON of a validated, default-filled config document."""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def resolve_output_dir(configured: str, override: str | None = None) -> Path:
    """CLI flag beats the environment variable, which beats the config file."""
    if override:
        return Path(override)
    from_env = os.environ.get(OUTPUT_DIR_ENV)
    if from_env:
        return Path(from_env)
    return Path(configured)
