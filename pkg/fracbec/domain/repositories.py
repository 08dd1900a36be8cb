# fracbec/domain/repositories.py
from abc import ABC, abstractmethod
from collections.abc import Sequence
from pathlib import Path
from typing import Any


class IResultRepository(ABC):
    """Interface for persisting run outputs; every file carries the config hash."""

    @abstractmethod
    def write_json(self, name: str, data: dict[str, Any]) -> Path:
        """Writes a JSON ledger."""
        pass  # pragma: no cover

    @abstractmethod
    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        """Writes a CSV table with a header row."""
        pass  # pragma: no cover

    @abstractmethod
    def write_columns(self, name: str, xs: Sequence[float], ys: Sequence[float]) -> Path:
        """Writes a plot-ready two-column text file."""
        pass  # pragma: no cover

    @abstractmethod
    def write_text(self, name: str, content: str) -> Path:
        """Writes a rendered text document."""
        pass  # pragma: no cover

    @abstractmethod
    def write_manifest(self, command: str, wall_time: float) -> Path:
        """Writes the run manifest listing every file written so far."""
        pass  # pragma: no cover
