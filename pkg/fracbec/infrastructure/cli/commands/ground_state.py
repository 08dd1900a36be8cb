# fracbec/infrastructure/cli/commands/ground_state.py
from dataclasses import replace
from typing import Any

from ....application.services import GroundStateService
from .utils import add_common_arguments, load_run_config, print_summary, recorded_run


def register_subparser(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "ground-state", help="Compute Q, the critical mass a* = ||Q||^2 and the requested moments."
    )
    add_common_arguments(parser)
    parser.add_argument(
        "--moment",
        type=float,
        action="append",
        default=[],
        help="Additionally report int |x|^p Q^2 for this p (repeatable, 0 <= p < 3).",
    )
    parser.set_defaults(func=run)


def run(args: Any) -> None:
    config = load_run_config(args)
    if args.moment:
        config = replace(
            config, ground_state=replace(config.ground_state, moments=config.ground_state.moments + tuple(args.moment))
        )
    with recorded_run("ground-state", config) as repo:
        result = GroundStateService(repo, config).run()
    summary = {
        "method": result.method.value,
        "a*": result.a_star,
        "int Q^4": result.q4,
        "seminorm": result.seminorm,
        "residual": result.residual,
        "iterations": result.iterations,
    }
    summary.update({f"moment p={p:g}": m for p, m in sorted(result.moments.items())})
    print_summary("Ground state", summary)
