# fracbec/infrastructure/cli/commands/sweep.py
from typing import Any

from rich.console import Console
from rich.table import Table

from ....application.services import SweepService
from .utils import add_common_arguments, load_run_config, print_checks, recorded_run


def register_subparser(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "sweep", help="Run the near-critical eps ladder and fit the scaling laws."
    )
    add_common_arguments(parser)
    parser.add_argument(
        "--symmetry-probe",
        action="store_true",
        dest="symmetry_probe",
        help="Also measure the mass asymmetry of u1 at the tightest ladder point (symmetric potentials only).",
    )
    parser.set_defaults(func=run)


def run(args: Any) -> None:
    config = load_run_config(args)
    with recorded_run("sweep", config) as repo:
        result, claims = SweepService(repo, config).run(symmetry_probe=args.symmetry_probe)

    table = Table(title=f"Sweep fits (p0 = {result.flatness.p0:g}, lambda = {result.lambda_predicted:.6g})")
    for column in ("law", "slope", "r^2", "points"):
        table.add_column(column, justify="right" if column != "law" else "left")
    for name, fit in result.fits.items():
        table.add_row(name, f"{fit.slope:.5f}", f"{fit.r_squared:.5f}", f"{fit.window[0]}-{fit.window[1]}")
    Console().print(table)
    print_checks("Sweep claims", claims)
