# fracbec/infrastructure/cli/commands/eig.py
from typing import Any

from ....application.services import EigenService
from .utils import add_common_arguments, load_run_config, print_summary, recorded_run


def register_subparser(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "eig", help="First eigenvalue and eigenfunction of sqrt(-Laplacian) + V_i for both components."
    )
    add_common_arguments(parser)
    parser.set_defaults(func=run)


def run(args: Any) -> None:
    config = load_run_config(args)
    with recorded_run("eig", config) as repo:
        lam1, lam2 = EigenService(repo, config).run()
    print_summary("First eigenvalues", {"lambda_11": lam1, "lambda_21": lam2, "sum": lam1 + lam2})
