"""Time integration of the Calabi flow ∂φ/∂t = R(ω_φ) - μ.

The flow is fourth order and stiff. The default stepper splits off its
linearization at the flat metric, φ_t = -Δ₀²φ, and treats it implicitly in
Fourier space; the nonlinear remainder is explicit. A classical RK4 stepper
on the full right-hand side serves as a reference. `run` drives either one
with step rejection on energy increase and the trap-set monitor.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from loguru import logger

from calabiflow.config import FlowConfig
from calabiflow.exceptions import NoProgressError, NotKahlerError
from calabiflow.functionals import calabi_energy
from calabiflow.geometry import (
    TAIL_FRACTION_WARNING,
    CurvatureBundle,
    MetricField,
    PotentialField,
    ScalarField,
    TorusDomain,
    curvature,
    integrate,
    mean_normalize,
    metric_from_potential,
    spectral_tail,
)
from calabiflow.models import (
    DiagnosticsRecord,
    MonitorMode,
    MonitorState,
    MonitorStatus,
    RunOutcome,
)

RK_STABILITY = 2.5
CA_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class FlowState:
    """A mean-normalized potential with its metric, curvature and energy."""

    t: float
    step: int
    mu: float
    phi: PotentialField
    metric: MetricField
    curvature: CurvatureBundle
    calabi: float

    @classmethod
    def build(
        cls, phi: PotentialField, mu: float = 0.0, t: float = 0.0, step: int = 0
    ) -> "FlowState":
        """Normalize φ and rebuild all caches.

        Raises:
            NotKahlerError: If φ is outside the Kähler cone
        """
        phi = mean_normalize(phi)
        metric = metric_from_potential(phi.domain, phi)
        curv = curvature(metric)
        return cls(
            t=t,
            step=step,
            mu=mu,
            phi=phi,
            metric=metric,
            curvature=curv,
            calabi=calabi_energy(metric, mu, curv),
        )

    @property
    def domain(self) -> TorusDomain:
        """Domain of the state."""
        return self.phi.domain


def rhs(state: FlowState) -> ScalarField:
    """R(ω_φ) - μ on the grid."""
    return state.curvature.scalar - state.mu


def linear_symbol(domain: TorusDomain) -> npt.NDArray[np.float64]:
    """Fourier symbol Λ_k = (Δ₀ eigenvalue)² of the linearized flow."""
    return domain.laplacian_symbol**2


def linearized_rate(domain: TorusDomain, wavevector: Sequence[int]) -> float:
    """Decay rate Λ_k = (π² Σ(k_a/L_a)²)² of mode k under φ_t = -Δ₀²φ."""
    k = domain.check_wavevector(wavevector)
    weighted = sum((component / period) ** 2 for component, period in zip(k, domain.periods))
    return (math.pi**2 * weighted) ** 2


def rk_stability_limit(domain: TorusDomain, c_stab: float = RK_STABILITY) -> float:
    """Largest dt for the explicit stepper, c_stab / max Λ_k."""
    return c_stab / float(np.max(linear_symbol(domain)))


def _normalized(domain: TorusDomain, coeffs: npt.NDArray[np.complex128]) -> PotentialField:
    coeffs[(0,) * domain.real_dim] = 0.0
    return PotentialField.from_coeffs(domain, coeffs)


def step_imex(state: FlowState, dt: float) -> FlowState:
    """One first-order IMEX step.

    Solves (1 + dt·Λ)φ̂' = φ̂ + dt·(R - μ + Δ₀²φ)^, i.e. implicit Euler on
    -Δ₀²φ and explicit Euler on the remainder.

    Raises:
        ValueError: If dt is not positive
        NotKahlerError: If the new potential leaves the Kähler cone
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    domain = state.domain
    lam = linear_symbol(domain)
    coeffs = state.phi.spectral_coeffs
    forcing = domain.forward(rhs(state)) + lam * coeffs
    updated = (coeffs + dt * forcing) / (1.0 + dt * lam)
    return FlowState.build(
        _normalized(domain, updated), state.mu, t=state.t + dt, step=state.step + 1
    )


def step_explicit_rk(state: FlowState, dt: float) -> FlowState:
    """One classical RK4 step on the full nonlinear right-hand side.

    Stable only for dt below `rk_stability_limit`; larger steps are attempted
    anyway so callers can observe the instability.

    Raises:
        ValueError: If dt is not positive
        NotKahlerError: If any stage leaves the Kähler cone
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    domain = state.domain
    if dt > rk_stability_limit(domain):
        logger.debug(f"dt={dt:.3e} exceeds the explicit stability limit")

    def evaluate(coeffs: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
        stage = FlowState.build(
            PotentialField.from_coeffs(domain, coeffs), state.mu, state.t, state.step
        )
        return domain.forward(rhs(stage))

    c0 = state.phi.spectral_coeffs
    k1 = domain.forward(rhs(state))
    k2 = evaluate(c0 + 0.5 * dt * k1)
    k3 = evaluate(c0 + 0.5 * dt * k2)
    k4 = evaluate(c0 + dt * k3)
    updated = c0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return FlowState.build(
        _normalized(domain, updated), state.mu, t=state.t + dt, step=state.step + 1
    )


class TrapMonitor:
    """Watch whether the Ricci bounds fixed early in a run stay doubled.

    During the warm-up window the monitor records K₃ and K₄ (the largest
    lower and upper curvature excursions). Afterwards the state is inside
    while -factor·K₃ <= (lower quantity) and (upper quantity) <= factor·K₄.
    In `ricci` mode the lower quantity is the smallest Ricci eigenvalue; in
    `scalar` mode it is the minimum scalar curvature.
    """

    def __init__(
        self,
        warmup_steps: int = 10,
        factor: float = 2.0,
        mode: MonitorMode = MonitorMode.RICCI,
        floor: float = 1e-12,
    ):
        """Initialize the monitor.

        Args:
            warmup_steps: Number of recorded states in the warm-up window
            factor: Multiplier on K₃, K₄ defining the trap set
            mode: Which lower bound is watched
            floor: Lower limit for K₃ and K₄
        """
        if warmup_steps < 1:
            raise ValueError("warmup_steps must be at least 1")
        self.warmup_steps = warmup_steps
        self.factor = factor
        self.mode = MonitorMode(mode)
        self.floor = floor
        self.k3 = 0.0
        self.k4 = 0.0
        self.seen = 0
        self.status = MonitorStatus()

    @classmethod
    def from_config(cls, config: FlowConfig) -> "TrapMonitor":
        """Build a monitor from flow settings."""
        return cls(
            warmup_steps=config.warmup_steps,
            factor=config.monitor_factor,
            mode=config.monitor_mode,
            floor=config.monitor_floor,
        )

    @property
    def exited(self) -> bool:
        """Whether the trap set has been left."""
        return self.status.state == MonitorState.EXITED

    def _lower(self, record: DiagnosticsRecord) -> float:
        if self.mode == MonitorMode.SCALAR:
            return record.scalar_min
        return record.ricci_eig_min

    def observe(self, record: DiagnosticsRecord) -> MonitorStatus:
        """Feed one recorded state and return the updated status."""
        if self.exited:
            return self.status
        lower = self._lower(record)
        if self.seen < self.warmup_steps:
            self.seen += 1
            self.k3 = max(self.k3, -lower, self.floor)
            self.k4 = max(self.k4, record.ricci_eig_max, self.floor)
            if self.seen == self.warmup_steps:
                logger.debug(f"trap bounds fixed: K3={self.k3:.4e}, K4={self.k4:.4e}")
                self.status = MonitorStatus(state=MonitorState.INSIDE)
            return self.status

        bound = None
        if lower < -self.factor * self.k3:
            bound = "lower"
        elif record.ricci_eig_max > self.factor * self.k4:
            bound = "upper"
        if bound is not None:
            self.status = MonitorStatus(
                state=MonitorState.EXITED, time=record.t, step=record.step, bound=bound
            )
            logger.info(f"trap monitor exited ({bound}) at t={record.t:.6g}")
        return self.status

    def snapshot(self) -> dict[str, object]:
        """Serialisable monitor state for checkpoints."""
        return {
            "k3": self.k3,
            "k4": self.k4,
            "seen": self.seen,
            "status": self.status.model_dump(mode="json"),
        }

    def restore(self, snapshot: dict[str, object]) -> None:
        """Restore state written by `snapshot`."""
        self.k3 = float(snapshot["k3"])  # type: ignore[arg-type]
        self.k4 = float(snapshot["k4"])  # type: ignore[arg-type]
        self.seen = int(snapshot["seen"])  # type: ignore[call-overload]
        self.status = MonitorStatus.model_validate(snapshot["status"])


def diagnostics(state: FlowState, dt: float, volume: float | None = None) -> DiagnosticsRecord:
    """Diagnostics record of a state (monitor status filled in by the caller)."""
    metric = state.metric
    volume = integrate(1.0, metric) if volume is None else volume
    return DiagnosticsRecord(
        step=state.step,
        t=state.t,
        dt=dt,
        calabi=state.calabi,
        ricci_eig_min=state.curvature.ricci_eig_min,
        ricci_eig_max=state.curvature.ricci_eig_max,
        scalar_min=state.curvature.scalar_min,
        sup_phi=state.phi.sup_norm(),
        spectral_tail=spectral_tail(state.domain, state.phi.spectral_coeffs),
        volume=volume,
        mean_scalar=integrate(state.curvature.scalar, metric) / volume,
    )


@dataclass
class FlowResult:
    """Trajectory and final state of a run."""

    outcome: RunOutcome
    final_state: FlowState
    records: list[DiagnosticsRecord]
    monitor: TrapMonitor
    dt_next: float
    max_volume_drift: float = 0.0
    messages: list[str] = field(default_factory=list)


Stepper = Callable[[FlowState, float], FlowState]
StepCallback = Callable[[FlowState, DiagnosticsRecord, float, TrapMonitor], None]

STEPPERS: dict[str, Stepper] = {"imex": step_imex, "rk4": step_explicit_rk}


def _accept(
    state: FlowState, dt: float, config: FlowConfig, stepper: Stepper
) -> tuple[FlowState, float]:
    """Take one step, halving dt until it is accepted."""
    allowed = state.calabi + config.ca_slack * max(state.calabi, CA_FLOOR)
    while dt >= config.dt_min:
        try:
            candidate = stepper(state, dt)
        except NotKahlerError as e:
            logger.debug(f"step rejected at dt={dt:.3e}: {e}")
            dt *= 0.5
            continue
        if not math.isfinite(candidate.calabi) or candidate.calabi > allowed:
            logger.debug(
                f"step rejected at dt={dt:.3e}: Ca {state.calabi:.6e} -> "
                f"{candidate.calabi:.6e}"
            )
            dt *= 0.5
            continue
        return candidate, dt
    raise NoProgressError(
        f"time step fell below dt_min={config.dt_min:g} at t={state.t:.6g}"
    )


def run(
    initial: PotentialField,
    config: FlowConfig,
    mu: float = 0.0,
    *,
    t0: float = 0.0,
    step0: int = 0,
    dt: float | None = None,
    monitor: TrapMonitor | None = None,
    on_step: StepCallback | None = None,
) -> FlowResult:
    """Evolve a potential under the Calabi flow with adaptive stepping.

    Stops when Ca < stop_ca, the trap monitor exits, t >= t_max or
    max_steps accepted steps were taken. A state is recorded for the
    initial data (unless resuming, signalled by step0 > 0) and for every
    accepted step.

    Args:
        initial: Initial potential (normalized on entry)
        config: Flow settings
        mu: Average scalar curvature of the class
        t0: Start time (resume)
        step0: Step counter of the initial state (resume)
        dt: First proposed step (default config.dt_init)
        monitor: Monitor to continue (default: a fresh one from config)
        on_step: Called after each recorded state with the state, its
            record, the next proposed dt and the monitor

    Returns:
        FlowResult with the outcome and all records

    Raises:
        NotKahlerError: If the initial potential is not admissible
        NoProgressError: If dt underflows; carries state and records
    """
    stepper = STEPPERS[config.integrator]
    monitor = monitor or TrapMonitor.from_config(config)
    dt = config.dt_init if dt is None else dt
    resuming = step0 > 0

    state = FlowState.build(initial, mu, t=t0, step=step0)
    volume0 = integrate(1.0, state.metric)
    max_drift = 0.0
    records: list[DiagnosticsRecord] = []
    warned_tail = False
    logger.info(
        f"flow start: n={state.domain.n}, N={state.domain.grid_size}, "
        f"t={state.t:.6g}, Ca={state.calabi:.6e}"
    )

    def record(current: FlowState, dt_used: float) -> None:
        nonlocal max_drift, warned_tail, last_entry
        volume = integrate(1.0, current.metric)
        max_drift = max(max_drift, abs(volume - volume0) / volume0)
        entry = diagnostics(current, dt_used, volume)
        status = monitor.observe(entry)
        entry = entry.model_copy(update={"monitor_status": status.label()})
        if entry.spectral_tail > TAIL_FRACTION_WARNING and not warned_tail:
            warned_tail = True
            logger.warning(
                f"potential under-resolved at step {entry.step}: "
                f"tail fraction {entry.spectral_tail:.2e}"
            )
        last_entry = entry
        if (current.step - step0) % config.record_every == 0:
            records.append(entry)
        if on_step is not None:
            on_step(current, entry, dt, monitor)

    last_entry: DiagnosticsRecord | None = None
    if not resuming:
        record(state, 0.0)

    while True:
        if state.calabi < config.stop_ca:
            outcome = RunOutcome.CONVERGED
            break
        if monitor.exited:
            outcome = RunOutcome.MONITOR_EXIT
            break
        if state.t >= config.t_max:
            outcome = RunOutcome.T_MAX
            break
        if state.step - step0 >= config.max_steps:
            outcome = RunOutcome.STEP_LIMIT
            break
        try:
            state, dt_used = _accept(state, dt, config, stepper)
        except NoProgressError as e:
            e.state = state
            e.records = records
            raise
        dt = min(dt_used * config.dt_growth, config.dt_max)
        record(state, dt_used)

    # The final state is always part of the trajectory
    if last_entry is not None and (not records or records[-1] is not last_entry):
        records.append(last_entry)
    logger.info(
        f"flow {outcome.value}: step={state.step}, t={state.t:.6g}, "
        f"Ca={state.calabi:.6e}"
    )
    return FlowResult(
        outcome=outcome,
        final_state=state,
        records=records,
        monitor=monitor,
        dt_next=dt,
        max_volume_drift=max_drift,
    )
