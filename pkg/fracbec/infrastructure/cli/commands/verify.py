# fracbec/infrastructure/cli/commands/verify.py
from functools import partial
from typing import Any

from ....application.services import VerificationService
from ....domain.errors import VerificationError
from ...report import render_verify_report
from .utils import add_common_arguments, load_run_config, print_checks, recorded_run


def register_subparser(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "verify", help="Run the invariant suite; exits with code 4 if any check fails."
    )
    add_common_arguments(parser)
    parser.add_argument(
        "--full",
        action="store_true",
        help="Also run the near-critical sweeps (scaling, profiles, flattest site, symmetry breaking).",
    )
    parser.set_defaults(func=run)


def run(args: Any) -> None:
    config = load_run_config(args)
    render = partial(render_verify_report, config_hash=config.config_hash)
    with recorded_run("verify", config) as repo:
        service = VerificationService(repo, config, render)
        try:
            checks = service.run(full=args.full)
        except VerificationError:
            print_checks("Verification", service.checks)
            raise
    print_checks("Verification", checks)
