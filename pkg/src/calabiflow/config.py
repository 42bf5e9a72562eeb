"""Configuration management for calabiflow.

This module defines the run configuration schema, loads it from a JSON file
and applies environment overrides (optionally read from a .env file).
"""

import hashlib
import json
import os
import re
from typing import Any, Literal

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from calabiflow.exceptions import ConfigError
from calabiflow.models import CohomologyData, MonitorMode

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "CALABIFLOW_OUTPUT_DIR"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainConfig(_Strict):
    """Torus domain: complex dimension, grid size and periods."""

    n: int = 1
    grid_size: int = 64
    # Defaults to all ones when omitted
    periods: list[float] | None = None


class ModeSpec(_Strict):
    """One cosine mode of an initial potential."""

    k: list[int]
    amplitude: float


class InitialConfig(_Strict):
    """Initial potential: a mode list or a checkpoint to resume from."""

    modes: list[ModeSpec] = Field(default_factory=list)
    checkpoint: str | None = None


class FlowConfig(_Strict):
    """Time integration and stopping parameters of a flow run."""

    integrator: Literal["imex", "rk4"] = "imex"
    dt_init: float = Field(default=1e-4, gt=0)
    dt_min: float = Field(default=1e-12, gt=0)
    dt_max: float = Field(default=1e-2, gt=0)
    dt_growth: float = Field(default=1.5, ge=1.0)
    t_max: float = Field(default=10.0, gt=0)
    max_steps: int = Field(default=10_000, ge=0)
    stop_ca: float = Field(default=1e-12, ge=0)
    ca_slack: float = Field(default=1e-10, ge=0)
    warmup_steps: int = Field(default=10, ge=1)
    monitor_factor: float = Field(default=2.0, gt=1.0)
    monitor_mode: MonitorMode = MonitorMode.RICCI
    # K3, K4 never drop below this, so a flat warm-up does not trap the run
    monitor_floor: float = Field(default=1e-12, gt=0)
    record_every: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _ordered_steps(self) -> "FlowConfig":
        if self.dt_min > self.dt_init or self.dt_init > self.dt_max:
            raise ValueError("need dt_min <= dt_init <= dt_max")
        return self


class OutputConfig(_Strict):
    """Where a run writes its artifacts."""

    directory: str = "runs"
    timeseries: str = "timeseries.csv"
    summary: str = "summary.json"
    checkpoint: str = "checkpoint.npz"
    # 0 writes only the final checkpoint
    checkpoint_every: int = Field(default=0, ge=0)
    sweep_report: str = "sweep.csv"
    check_report: str = "check.json"


class SweepConfig(_Strict):
    """Grid of initial data for a sweep of independent runs.

    Points are the explicit `points` followed by every combination of
    `amplitudes` with `wavevectors` (single-mode initial data).
    """

    amplitudes: list[float] = Field(default_factory=list)
    wavevectors: list[list[int]] = Field(default_factory=list)
    points: list[list[ModeSpec]] = Field(default_factory=list)
    workers: int = 1


class CheckConfig(_Strict):
    """Randomized identity-check suite."""

    dimensions: list[Literal[1, 2]] = Field(default_factory=lambda: [1, 2])
    grid_sizes: dict[str, int] = Field(default_factory=lambda: {"1": 64, "2": 32})
    random_potentials: int = Field(default=20, ge=0)
    amplitude: float = Field(default=1e-2, gt=0)
    max_wavenumber: int = Field(default=1, ge=1)
    modes_per_potential: int = Field(default=3, ge=1)
    # Pairs with a curved reference metric ω, drawn after the flat-reference ones
    curved_pairs: int = Field(default=5, ge=0)
    include_flat: bool = True
    # -1 flips the Green's function sign (fault injection)
    green_sign: float = 1.0


class RunConfig(_Strict):
    """Complete, serialisable description of an experiment."""

    schema_version: Literal[1] = SCHEMA_VERSION
    domain: DomainConfig = Field(default_factory=DomainConfig)
    initial: InitialConfig = Field(default_factory=InitialConfig)
    flow: FlowConfig = Field(default_factory=FlowConfig)
    cohomology: CohomologyData | None = None
    output: OutputConfig = Field(default_factory=OutputConfig)
    seed: int = 0
    fft_workers: int | None = None
    sweep: SweepConfig | None = None
    check: CheckConfig | None = None

    @model_validator(mode="after")
    def _consistent_dimension(self) -> "RunConfig":
        if self.cohomology is not None and self.cohomology.n != self.domain.n:
            raise ValueError(
                f"cohomology.n = {self.cohomology.n} but domain.n = {self.domain.n}"
            )
        return self


def _line_of_key(text: str, key: str) -> int | None:
    match = re.search(rf'"{re.escape(key)}"\s*:', text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def parse_config(text: str, path: str = "<config>") -> RunConfig:
    """Parse and validate a JSON config document.

    Args:
        text: JSON text
        path: Name used in error messages

    Returns:
        The validated RunConfig

    Raises:
        ConfigError: With the line of the syntax error or offending key
    """
    try:
        raw: Any = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, path=path, line=e.lineno) from e
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object", path=path, line=1)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        keys = [str(part) for part in first["loc"] if isinstance(part, str)]
        line = _line_of_key(text, keys[-1]) if keys else None
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ConfigError(f"{location}: {first['msg']}", path=path, line=line) from e


def load_config(config_file: str, env_file: str | None = None) -> RunConfig:
    """Load a run configuration and apply environment overrides.

    Args:
        config_file: Path to the JSON config
        env_file: Optional .env file (default locations are searched otherwise)

    Returns:
        RunConfig with overrides applied

    Raises:
        ConfigError: If the file cannot be read or validated
    """
    if env_file:
        load_dotenv(env_file)
    else:
        load_dotenv()

    try:
        with open(config_file, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}", path=config_file) from e

    config = parse_config(text, path=config_file)
    output_dir = os.getenv(OUTPUT_DIR_ENV)
    if output_dir:
        config = config.model_copy(
            update={"output": config.output.model_copy(update={"directory": output_dir})}
        )
    return config


def config_hash(config: RunConfig) -> str:
    """SHA-256 over the physics sections (domain, flow, cohomology)."""
    physics = {
        "domain": config.domain.model_dump(mode="json"),
        "flow": config.flow.model_dump(mode="json"),
        "cohomology": (
            config.cohomology.model_dump(mode="json") if config.cohomology else None
        ),
    }
    canonical = json.dumps(physics, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
