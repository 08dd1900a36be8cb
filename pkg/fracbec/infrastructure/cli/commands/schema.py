# fracbec/infrastructure/cli/commands/schema.py
import json
from typing import Any

from rich.console import Console
from rich.syntax import Syntax

from ...config import load_schema


def register_subparser(subparsers: Any) -> None:
    schema_parser = subparsers.add_parser(
        "schema", help="Print the JSON schema of the run configuration."
    )
    schema_parser.add_argument(
        "--plain", action="store_true", help="Print raw JSON without syntax highlighting."
    )
    schema_parser.set_defaults(func=run)


def run(args: Any) -> None:
    """Prints the packaged config_schema.json."""
    content = json.dumps(load_schema(), indent=2)
    if args.plain:
        print(content)
    else:
        Console().print(Syntax(content, "json", background_color="default"))
