# fracbec/infrastructure/repositories/file_system_repository.py
import csv
import json
import math
import platform
from collections.abc import Sequence
from importlib.metadata import PackageNotFoundError, version
from numbers import Integral, Real
from pathlib import Path
from typing import Any

import numpy as np

from ...domain.repositories import IResultRepository


def _jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, Integral):
        return int(value)
    if isinstance(value, Real):
        number = float(value)
        return number if math.isfinite(number) else None
    return value


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, Real):
        return repr(float(value))
    return str(value)


def _package_version(name: str) -> str:
    try:
        return version(name)
    except PackageNotFoundError:
        return "unknown"


class FileSystemResultRepository(IResultRepository):
    """Writes run outputs under one directory, stamping each file with the config hash."""

    def __init__(self, output_dir: Path, config_hash: str):
        self.output_dir = Path(output_dir)
        self.config_hash = config_hash
        self.written: list[str] = []

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        if name not in self.written:
            self.written.append(name)
        return self.output_dir / name

    def write_json(self, name: str, data: dict[str, Any]) -> Path:
        path = self._path(name)
        document = _jsonable({**data, "config_hash": self.config_hash})
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(document, f, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# config_hash={self.config_hash}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        return path

    def write_columns(self, name: str, xs: Sequence[float], ys: Sequence[float]) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"# config_hash={self.config_hash}\n")
            for x, y in zip(xs, ys):
                f.write(f"{_cell(x)} {_cell(y)}\n")
        return path

    def write_text(self, name: str, content: str) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
        return path

    def write_manifest(self, command: str, wall_time: float) -> Path:
        files_written = sorted(self.written)
        path = self._path("run_manifest.json")
        manifest = {
            "command": command,
            "config_hash": self.config_hash,
            "wall_time_seconds": wall_time,
            "files": files_written,
            "versions": {
                "fracbec": _package_version("fracbec"),
                "numpy": np.__version__,
                "scipy": _package_version("scipy"),
                "sympy": _package_version("sympy"),
                "python": platform.python_version(),
            },
        }
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return path
