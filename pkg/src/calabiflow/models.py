"""Data models for calabiflow.

This module defines the serialisable records used throughout the package:
intersection data, per-step diagnostics, monitor status, identity reports
and run summaries.
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator


class CohomologyData(BaseModel):
    """Intersection numbers that determine μ and Ψ.

    Pairings are with the Kähler class [ω]; `c1sq_w_nm2` is ignored when n = 1.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    n: int = Field(ge=1)
    c1_w_nm1: float = 0.0  # [c1]·[ω]^(n-1)
    c1sq_w_nm2: float = 0.0  # [c1]^2·[ω]^(n-2)
    w_n: float = 1.0  # [ω]^n

    @field_validator("w_n")
    @classmethod
    def _positive_volume(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("w_n must be positive")
        return value


class MonitorMode(str, Enum):
    """Which trap set the monitor watches."""

    RICCI = "ricci"  # -2K3 ω <= Ric <= 2K4 ω
    SCALAR = "scalar"  # R >= -2K3 and Ric <= 2K4 ω


class MonitorState(str, Enum):
    """Trap monitor states."""

    WARMUP = "warmup"
    INSIDE = "inside"
    EXITED = "exited"


class MonitorStatus(BaseModel):
    """Current status of a trap monitor."""

    state: MonitorState = MonitorState.WARMUP
    time: float | None = None
    step: int | None = None
    bound: str | None = None  # "lower" or "upper"

    def label(self) -> str:
        """Return the compact label written to time-series files."""
        if self.state == MonitorState.EXITED:
            return f"exited:{self.bound}"
        return self.state.value


class DiagnosticsRecord(BaseModel):
    """Diagnostics of one accepted flow state."""

    step: int
    t: float
    dt: float
    calabi: float
    ricci_eig_min: float
    ricci_eig_max: float
    scalar_min: float
    sup_phi: float
    spectral_tail: float
    volume: float
    mean_scalar: float
    monitor_status: str = MonitorState.WARMUP.value


class IdentityReport(BaseModel):
    """Outcome of one numerical identity or inequality check."""

    name: str
    residual_sup: float
    residual_l2: float
    tolerance: float
    passed: bool
    # Signed slack for inequality checks (negative means violated)
    margin: float | None = None


class EnergyReport(BaseModel):
    """Terms of the Calabi energy decomposition."""

    calabi: float
    ricci_deviation: float
    psi: float
    mu: float
    decomposition_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        """Whether the residual is within tolerance."""
        return abs(self.decomposition_residual) <= self.tolerance


class RunOutcome(str, Enum):
    """How a flow run ended."""

    CONVERGED = "converged"
    MONITOR_EXIT = "monitor_exit"
    T_MAX = "t_max"
    STEP_LIMIT = "step_limit"
    NO_PROGRESS = "no_progress"


class RunSummary(BaseModel):
    """Summary written next to a run's time series."""

    outcome: RunOutcome
    steps: int
    t_final: float
    initial_calabi: float
    final_calabi: float
    final_sup_phi: float
    max_volume_drift: float
    monitor: MonitorStatus
    config_hash: str
    wall_time: float
    message: str | None = None


class SweepRow(BaseModel):
    """One row of a sweep report."""

    index: int
    label: str
    initial_calabi: float | None = None
    final_calabi: float | None = None
    outcome: str
    steps: int = 0
    t_final: float | None = None
    time_to_half_energy: float | None = None
    error_message: str | None = None


class CohomologySummary(BaseModel):
    """Cohomological quantities of a Kähler class with informational flags."""

    data: CohomologyData
    mu: float
    psi: float
    flags: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)
