"""calabiflow: a numerical laboratory for the Calabi flow on flat complex tori.

This package evolves Kähler potentials under ∂φ/∂t = R(ω_φ) - μ, tracks the
Calabi energy and curvature bounds, and checks the identities relating two
Kähler metrics on desk-scale spectral grids.
"""

import argparse
import os
import sys

from loguru import logger

from calabiflow.config import FlowConfig, RunConfig, load_config
from calabiflow.exceptions import (
    CalabiFlowError,
    CheckpointError,
    CohomologyError,
    ConfigError,
    DomainError,
    NoProgressError,
    NotKahlerError,
)
from calabiflow.flow import FlowResult, FlowState, TrapMonitor, run
from calabiflow.geometry import (
    MetricField,
    PotentialField,
    TorusDomain,
    make_domain,
    metric_from_potential,
    potential_from_modes,
)
from calabiflow.models import CohomologyData, DiagnosticsRecord, IdentityReport
from calabiflow.runner import cmd_check, cmd_cohomology, cmd_flow_run, cmd_sweep

# No typing imports needed here due to Python 3.10+ syntax


__version__ = "0.1.0"

# Export public classes
__all__ = [
    "RunConfig",
    "FlowConfig",
    "load_config",
    "TorusDomain",
    "PotentialField",
    "MetricField",
    "make_domain",
    "potential_from_modes",
    "metric_from_potential",
    "FlowState",
    "FlowResult",
    "TrapMonitor",
    "run",
    "CohomologyData",
    "DiagnosticsRecord",
    "IdentityReport",
    "CalabiFlowError",
    "DomainError",
    "NotKahlerError",
    "NoProgressError",
    "CohomologyError",
    "ConfigError",
    "CheckpointError",
    "main",
]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Calabi flow experiments on flat complex tori"
    )
    parser.add_argument(
        "--env",
        "-e",
        help="Path to a .env file with overrides",
        default=os.environ.get("CALABIFLOW_ENV"),
    )
    parser.add_argument(
        "--debug",
        "-d",
        action="store_true",
        help="Enable debug logging",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    flow = commands.add_parser("flow", help="Run flows")
    flow_commands = flow.add_subparsers(dest="flow_command", required=True)
    flow_run = flow_commands.add_parser("run", help="Run one flow")
    flow_run.add_argument("config", help="Path to run config (JSON)")
    flow_sweep = flow_commands.add_parser("sweep", help="Run a grid of flows")
    flow_sweep.add_argument("config", help="Path to run config (JSON)")

    check = commands.add_parser("check", help="Run the identity check suite")
    check.add_argument("config", help="Path to run config (JSON)")

    coh = commands.add_parser("cohomology", help="Compute μ and Ψ from pairings")
    coh.add_argument("--n", type=int, required=True, help="Complex dimension")
    coh.add_argument("--c1w", type=float, default=0.0, help="[c1]·[ω]^(n-1)")
    coh.add_argument("--c1sq", type=float, default=0.0, help="[c1]^2·[ω]^(n-2)")
    coh.add_argument("--wn", type=float, required=True, help="[ω]^n")
    coh.add_argument(
        "--epsilon", type=float, default=0.0, help="Flag Ψ <= -epsilon (0 disables)"
    )
    return parser


def main(args: list[str] | None = None) -> int:
    """Run the calabiflow tool from the command line.

    Args:
        args: Command line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    parser = _build_parser()
    try:
        parsed_args = parser.parse_args(args)
    except SystemExit as e:
        # argparse exits 2 on usage errors, which would read as monitor_exit
        return 0 if e.code == 0 else 4

    # Configure logging
    log_level = "DEBUG" if parsed_args.debug else "INFO"
    logger.remove()
    logger.add(sys.stderr, level=log_level)

    try:
        if parsed_args.command == "flow":
            if parsed_args.flow_command == "run":
                return cmd_flow_run(parsed_args.config, parsed_args.env)
            return cmd_sweep(parsed_args.config, parsed_args.env)
        if parsed_args.command == "check":
            return cmd_check(parsed_args.config, parsed_args.env)
        return cmd_cohomology(
            parsed_args.n,
            parsed_args.c1w,
            parsed_args.c1sq,
            parsed_args.wn,
            parsed_args.epsilon,
        )
    except Exception as e:
        logger.exception(f"Error running {parsed_args.command}: {e}")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
