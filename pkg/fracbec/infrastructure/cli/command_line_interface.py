# fracbec/infrastructure/cli/command_line_interface.py
import argparse
import sys
from collections.abc import Sequence

from rich.console import Console
from rich.markup import escape

from fracbec import __version__

from ...domain.errors import FracBecError
from ..utils import setup_logging
from .commands import eig, ground_state, minimize, schema, sweep, verify


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracbec",
        description="Ground states and near-critical concentration of two-component half-Laplacian condensates.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="Log solver progress at DEBUG level.")
    noise.add_argument("-q", "--quiet", action="store_true", help="Only log warnings and errors.")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    ground_state.register_subparser(subparsers)
    eig.register_subparser(subparsers)
    minimize.register_subparser(subparsers)
    sweep.register_subparser(subparsers)
    verify.register_subparser(subparsers)
    schema.register_subparser(subparsers)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help(sys.stderr)
        return 1

    setup_logging(1 if args.verbose else -1 if args.quiet else 0)
    try:
        args.func(args)
    except FracBecError as e:
        Console(stderr=True).print(f"[bold red]Error ({type(e).__name__}):[/bold red] {escape(str(e))}", highlight=False)
        return e.exit_code
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
