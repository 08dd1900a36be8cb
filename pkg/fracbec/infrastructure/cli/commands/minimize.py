# fracbec/infrastructure/cli/commands/minimize.py
from typing import Any

from ....application.services import MinimizeService
from .utils import add_common_arguments, load_run_config, print_summary, recorded_run


def register_subparser(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "minimize", help="Minimize the coupled energy at the configured (a1, a2, beta)."
    )
    add_common_arguments(parser)
    parser.add_argument(
        "--probe",
        action="store_true",
        help="Also run the uniqueness probe from probes.n_starts random positive starts.",
    )
    parser.set_defaults(func=run)


def run(args: Any) -> None:
    config = load_run_config(args)
    with recorded_run("minimize", config) as repo:
        result, probe = MinimizeService(repo, config).run(probe=args.probe)
    summary: dict[str, Any] = {
        "energy": result.energy,
        "mu_1": result.mu1,
        "mu_2": result.mu2,
        "max point 1": result.max_points[0],
        "max point 2": result.max_points[1],
        "residual": result.residual,
        "iterations": result.iterations,
    }
    if probe is not None:
        summary["probe distance"] = probe.distance
        summary["probe starts converged"] = f"{probe.converged}/{probe.converged + probe.failed}"
    print_summary("Coupled minimizer", summary)
