# fracbec/infrastructure/cli/commands/utils.py
import time
from collections.abc import Iterator, Mapping
from contextlib import contextmanager
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.markup import escape
from rich.table import Table

from ....domain.models import Check, RunConfig
from ...config import parse_config
from ...repositories.file_system_repository import FileSystemResultRepository


def add_common_arguments(parser: Any) -> None:
    parser.add_argument("config", type=Path, help="Path to the JSON run configuration.")
    parser.add_argument(
        "--output-dir",
        dest="output_dir",
        default=None,
        help="Directory for the results; overrides FRACBEC_OUTPUT_DIR and output.directory.",
    )


def load_run_config(args: Any) -> RunConfig:
    return parse_config(args.config, getattr(args, "output_dir", None))


@contextmanager
def recorded_run(command: str, config: RunConfig) -> Iterator[FileSystemResultRepository]:
    """Yields the result repository and writes the run manifest on the way out, also after a failure."""
    repo = FileSystemResultRepository(Path(config.output_dir), config.config_hash)
    start = time.perf_counter()
    try:
        yield repo
    finally:
        repo.write_manifest(command, time.perf_counter() - start)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def print_summary(title: str, values: Mapping[str, Any]) -> None:
    table = Table(title=title, show_header=False)
    table.add_column("quantity", style="cyan")
    table.add_column("value")
    for key, value in values.items():
        table.add_row(key, escape(_fmt(value)))
    Console().print(table)


def print_checks(title: str, checks: list[Check]) -> None:
    table = Table(title=title)
    table.add_column("check", style="cyan")
    table.add_column("result")
    table.add_column("value", justify="right")
    table.add_column("threshold", justify="right")
    table.add_column("detail", style="dim")
    for check in checks:
        verdict = "[green]pass[/green]" if check.passed else "[bold red]FAIL[/bold red]"
        table.add_row(escape(check.name), verdict, _fmt(check.value), _fmt(check.threshold), escape(check.detail))
    Console().print(table)
