"""Exception hierarchy for calabiflow.

Library code raises these; the command-line layer catches them and maps
them to exit codes.
"""

from typing import Any


class CalabiFlowError(Exception):
    """Base class for all calabiflow errors."""


class DomainError(CalabiFlowError, ValueError):
    """Invalid torus domain or field input."""


class NotKahlerError(CalabiFlowError):
    """A metric left the Kähler cone (positivity lost)."""

    def __init__(self, message: str, min_eigenvalue: float = float("nan")):
        """Initialize the error.

        Args:
            message: Human readable description
            min_eigenvalue: Smallest metric eigenvalue found on the grid
        """
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NoProgressError(CalabiFlowError):
    """The adaptive time step fell below its floor."""

    def __init__(
        self,
        message: str,
        state: Any = None,
        records: list[Any] | None = None,
    ):
        """Initialize the error.

        Args:
            message: Human readable description
            state: Last accepted FlowState
            records: Diagnostics recorded before the failure
        """
        super().__init__(message)
        self.state = state
        self.records = records or []


class CohomologyError(CalabiFlowError, ValueError):
    """Invalid intersection data."""


class ConfigError(CalabiFlowError, ValueError):
    """Run configuration could not be parsed or validated."""

    def __init__(self, message: str, path: str = "<config>", line: int | None = None):
        """Initialize the error with a line-anchored message.

        Args:
            message: Description of the problem
            path: Config file path
            line: 1-based line of the offending text, if known
        """
        anchor = f"{path}:{line}" if line is not None else path
        super().__init__(f"{anchor}: {message}")
        self.path = path
        self.line = line


class CheckpointError(CalabiFlowError):
    """Checkpoint file is unreadable or inconsistent with the run."""
