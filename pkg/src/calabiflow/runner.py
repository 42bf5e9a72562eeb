"""Command implementations: flow runs, sweeps, identity checks and μ/Ψ.

Each `cmd_*` function takes already parsed arguments, writes its artifacts
and returns a process exit code. Library exceptions are caught here and
mapped to codes; nothing below this layer exits the process.
"""

import csv
import io
import json
import os
import time
from collections.abc import Sequence
from typing import IO, Any

import numpy as np
from joblib import Parallel, delayed
from loguru import logger
from pydantic import ValidationError

from calabiflow import cohomology
from calabiflow.checkpoint import Checkpoint, atomic_write, load_checkpoint, save_checkpoint
from calabiflow.config import CheckConfig, RunConfig, config_hash, load_config
from calabiflow.estimates import run_all_checks
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
    set_fft_workers,
)
from calabiflow.models import (
    CohomologyData,
    DiagnosticsRecord,
    IdentityReport,
    RunOutcome,
    RunSummary,
    SweepRow,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_MONITOR = 2
EXIT_LIMIT = 3
EXIT_CONFIG = 4
EXIT_NUMERICAL = 5

OUTCOME_EXIT_CODES = {
    RunOutcome.CONVERGED: EXIT_OK,
    RunOutcome.MONITOR_EXIT: EXIT_MONITOR,
    RunOutcome.T_MAX: EXIT_LIMIT,
    RunOutcome.STEP_LIMIT: EXIT_LIMIT,
    RunOutcome.NO_PROGRESS: EXIT_NUMERICAL,
}

TIMESERIES_COLUMNS = list(DiagnosticsRecord.model_fields)
SWEEP_COLUMNS = list(SweepRow.model_fields)

Modes = list[tuple[list[int], float]]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(rows: Sequence[dict[str, Any]], columns: list[str], header: bool) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    if header:
        writer.writeheader()
    for row in rows:
        writer.writerow({key: _cell(row[key]) for key in columns})
    return buffer.getvalue()


def write_timeseries(
    path: str, records: Sequence[DiagnosticsRecord], append: bool = False
) -> None:
    """Write diagnostics records as CSV (floats in repr form).

    Args:
        path: Destination file
        records: Records in step order
        append: Keep the rows of an existing file and add these after them
    """
    previous = ""
    if append and os.path.exists(path):
        with open(path, encoding="utf-8") as f:
            previous = f.read()
    content = previous + _csv_text(
        [r.model_dump(mode="json") for r in records],
        TIMESERIES_COLUMNS,
        header=not previous,
    )

    def write(f: IO[Any]) -> None:
        f.write(content)

    atomic_write(path, write)


def write_json(path: str, payload: str) -> None:
    """Atomically write a JSON document."""

    def write(f: IO[Any]) -> None:
        f.write(payload)
        f.write("\n")

    atomic_write(path, write)


def build_domain(config: RunConfig) -> TorusDomain:
    """Domain described by a config."""
    return make_domain(config.domain.n, config.domain.grid_size, config.domain.periods)


def class_data(config: RunConfig, domain: TorusDomain) -> CohomologyData:
    """Intersection data of the run (torus data unless configured)."""
    return config.cohomology or cohomology.torus_cohomology(domain)


def initial_potential(domain: TorusDomain, modes: Modes) -> PotentialField:
    """Potential built from (wavevector, amplitude) pairs."""
    return potential_from_modes(domain, [(k, a) for k, a in modes])


def config_modes(config: RunConfig) -> Modes:
    """Initial modes of a config as plain pairs."""
    return [(list(m.k), m.amplitude) for m in config.initial.modes]


def _output_path(config: RunConfig, name: str) -> str:
    return os.path.join(config.output.directory, name)


def _load_run_config(config_file: str, env_file: str | None) -> RunConfig | None:
    try:
        config = load_config(config_file, env_file)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return None
    set_fft_workers(config.fft_workers)
    return config


def _checkpoint_from(
    state: FlowState,
    dt_next: float,
    monitor: TrapMonitor,
    digest: str,
    summary: dict[str, Any],
) -> Checkpoint:
    domain = state.domain
    return Checkpoint(
        n=domain.n,
        grid_size=domain.grid_size,
        periods=domain.periods,
        coeffs=np.array(state.phi.spectral_coeffs),
        t=state.t,
        step=state.step,
        dt_next=dt_next,
        mu=state.mu,
        calabi=state.calabi,
        config_hash=digest,
        monitor=monitor.snapshot(),
        summary=summary,
    )


def cmd_flow_run(config_file: str, env_file: str | None = None) -> int:
    """Run one Calabi flow from a config file.

    Writes the time series CSV, a summary JSON and checkpoints under the
    configured output directory.

    Args:
        config_file: Path to the JSON run config
        env_file: Optional .env file with overrides

    Returns:
        0 converged, 2 monitor exit, 3 t_max or step limit, 4 config error,
        5 numerical failure, 1 unexpected error
    """
    config = _load_run_config(config_file, env_file)
    if config is None:
        return EXIT_CONFIG

    digest = config_hash(config)
    try:
        domain = build_domain(config)
        data = class_data(config, domain)
        mu = cohomology.mu(data)
        resume: Checkpoint | None = None
        if config.initial.checkpoint:
            resume = load_checkpoint(config.initial.checkpoint)
            if resume.domain != domain:
                raise ConfigError(
                    "checkpoint domain differs from the configured domain",
                    path=config_file,
                )
            if resume.config_hash != digest:
                logger.warning("checkpoint was written with a different configuration")
            phi = resume.potential()
        else:
            phi = initial_potential(domain, config_modes(config))
        # Validates positivity before any output is produced
        initial_state = FlowState.build(phi, mu)
    except (ConfigError, DomainError, CohomologyError, CheckpointError) as e:
        logger.error(f"Invalid run setup: {e}")
        return EXIT_CONFIG
    except NotKahlerError as e:
        logger.error(f"Initial potential is not admissible: {e}")
        return EXIT_CONFIG

    timeseries_path = _output_path(config, config.output.timeseries)
    summary_path = _output_path(config, config.output.summary)
    checkpoint_path = _output_path(config, config.output.checkpoint)
    os.makedirs(config.output.directory, exist_ok=True)

    monitor = TrapMonitor.from_config(config.flow)
    run_kwargs: dict[str, Any] = {}
    initial_calabi = initial_state.calabi
    if resume is not None:
        monitor.restore(resume.monitor)
        run_kwargs = {"t0": resume.t, "step0": resume.step, "dt": resume.dt_next}
        initial_calabi = resume.summary.get("initial_calabi", resume.calabi)

    every = config.output.checkpoint_every

    def on_step(
        state: FlowState, record: DiagnosticsRecord, dt_next: float, mon: TrapMonitor
    ) -> None:
        if every and state.step > 0 and state.step % every == 0:
            save_checkpoint(
                checkpoint_path,
                _checkpoint_from(
                    state, dt_next, mon, digest, {"initial_calabi": initial_calabi}
                ),
            )

    started = time.perf_counter()
    try:
        result: FlowResult | None = run(
            phi, config.flow, mu, monitor=monitor, on_step=on_step, **run_kwargs
        )
        records = result.records
        final_state = result.final_state
        outcome = result.outcome
        message = None
    except NoProgressError as e:
        logger.error(f"Flow stopped: {e}")
        result = None
        records = list(e.records)
        final_state = e.state
        outcome = RunOutcome.NO_PROGRESS
        message = str(e)
    except Exception as e:
        logger.exception(f"Error running flow: {e}")
        return EXIT_FAILED
    wall_time = time.perf_counter() - started

    write_timeseries(timeseries_path, records, append=resume is not None)
    if result is not None:
        save_checkpoint(
            checkpoint_path,
            _checkpoint_from(
                final_state,
                result.dt_next,
                result.monitor,
                digest,
                {"initial_calabi": initial_calabi, "outcome": outcome.value},
            ),
        )

    summary = RunSummary(
        outcome=outcome,
        steps=final_state.step,
        t_final=final_state.t,
        initial_calabi=initial_calabi,
        final_calabi=final_state.calabi,
        final_sup_phi=final_state.phi.sup_norm(),
        max_volume_drift=result.max_volume_drift if result else 0.0,
        monitor=result.monitor.status if result else monitor.status,
        config_hash=digest,
        wall_time=wall_time,
        message=message,
    )
    write_json(summary_path, summary.model_dump_json(indent=2))
    logger.info(
        f"Run {outcome.value}: {final_state.step} steps, Ca={final_state.calabi:.6e}; "
        f"wrote {timeseries_path} and {summary_path}"
    )
    return OUTCOME_EXIT_CODES[outcome]


def sweep_points(config: RunConfig) -> list[tuple[str, Modes]]:
    """Expand the sweep section into labelled initial mode lists."""
    if config.sweep is None:
        return []
    points: list[tuple[str, Modes]] = []
    for i, point in enumerate(config.sweep.points):
        points.append((f"point{i}", [(list(m.k), m.amplitude) for m in point]))
    for amplitude in config.sweep.amplitudes:
        for k in config.sweep.wavevectors:
            points.append((f"a={amplitude!r} k={list(k)}", [(list(k), amplitude)]))
    return points


def time_to_half_energy(records: Sequence[DiagnosticsRecord]) -> float | None:
    """First recorded time at which Ca is at most half its initial value."""
    if not records:
        return None
    target = 0.5 * records[0].calabi
    for record in records:
        if record.calabi <= target:
            return record.t
    return None


def sweep_point(
    index: int, label: str, modes: Modes, config: RunConfig
) -> SweepRow:
    """Run one grid point of a sweep and summarize it as a row.

    Failures are recorded in the row instead of raised.
    """
    set_fft_workers(config.fft_workers)
    try:
        domain = build_domain(config)
        mu = cohomology.mu(class_data(config, domain))
        phi = initial_potential(domain, modes)
        result = run(phi, config.flow, mu)
    except NoProgressError as e:
        initial = e.records[0].calabi if e.records else None
        return SweepRow(
            index=index,
            label=label,
            initial_calabi=initial,
            final_calabi=e.state.calabi if e.state is not None else None,
            outcome=RunOutcome.NO_PROGRESS.value,
            steps=e.state.step if e.state is not None else 0,
            t_final=e.state.t if e.state is not None else None,
            time_to_half_energy=time_to_half_energy(e.records),
            error_message=str(e),
        )
    except NotKahlerError as e:
        return SweepRow(index=index, label=label, outcome="not_kahler", error_message=str(e))
    except CalabiFlowError as e:
        return SweepRow(index=index, label=label, outcome="error", error_message=str(e))

    return SweepRow(
        index=index,
        label=label,
        initial_calabi=result.records[0].calabi,
        final_calabi=result.final_state.calabi,
        outcome=result.outcome.value,
        steps=result.final_state.step,
        t_final=result.final_state.t,
        time_to_half_energy=time_to_half_energy(result.records),
    )


def write_sweep_report(path: str, rows: Sequence[SweepRow]) -> None:
    """Write sweep rows as CSV (header only for an empty sweep)."""
    content = _csv_text([r.model_dump(mode="json") for r in rows], SWEEP_COLUMNS, True)

    def write(f: IO[Any]) -> None:
        f.write(content)

    atomic_write(path, write)


def cmd_sweep(config_file: str, env_file: str | None = None) -> int:
    """Run every point of the sweep grid as an independent flow.

    Returns:
        0 once the report is written (per-run failures are rows), 4 on a
        config error, 1 on an unexpected error
    """
    config = _load_run_config(config_file, env_file)
    if config is None:
        return EXIT_CONFIG
    try:
        build_domain(config)
    except DomainError as e:
        logger.error(f"Invalid run setup: {e}")
        return EXIT_CONFIG

    points = sweep_points(config)
    workers = config.sweep.workers if config.sweep else 1
    logger.info(f"Sweeping {len(points)} initial data with {workers} worker(s)")
    try:
        rows = Parallel(n_jobs=workers)(
            delayed(sweep_point)(i, label, modes, config)
            for i, (label, modes) in enumerate(points)
        )
    except Exception as e:
        logger.exception(f"Error running sweep: {e}")
        return EXIT_FAILED

    path = _output_path(config, config.output.sweep_report)
    write_sweep_report(path, rows)
    converged = sum(1 for row in rows if row.outcome == RunOutcome.CONVERGED.value)
    logger.info(f"Sweep completed: {converged}/{len(rows)} converged; wrote {path}")
    return EXIT_OK


def random_modes(
    rng: np.random.Generator,
    domain: TorusDomain,
    count: int,
    amplitude: float,
    max_wavenumber: int,
) -> Modes:
    """Draw `count` non-constant modes with total amplitude at most `amplitude`."""
    modes: Modes = []
    while len(modes) < count:
        k = rng.integers(-max_wavenumber, max_wavenumber + 1, size=domain.real_dim)
        if not np.any(k):
            continue
        a = float(rng.uniform(-1.0, 1.0)) * amplitude / count
        modes.append(([int(v) for v in k], a))
    return modes


def _random_metric(
    rng: np.random.Generator, domain: TorusDomain, check: CheckConfig
) -> MetricField:
    modes = random_modes(
        rng, domain, check.modes_per_potential, check.amplitude, check.max_wavenumber
    )
    return metric_from_potential(domain, potential_from_modes(domain, modes))


def check_cases(config: RunConfig) -> list[tuple[str, MetricField, MetricField]]:
    """Build the (label, ω′, ω) pairs of the check suite.

    Per dimension: the flat pair, `random_potentials` metrics against the
    flat reference, then `curved_pairs` pairs of two random metrics.
    """
    check = config.check
    assert check is not None
    rng = np.random.default_rng(config.seed)
    cases: list[tuple[str, MetricField, MetricField]] = []
    for n in check.dimensions:
        grid_size = check.grid_sizes.get(str(n), 32)
        domain = make_domain(n, grid_size)
        flat = MetricField.flat(domain)
        if check.include_flat:
            cases.append((f"n={n} flat", flat, flat))
        for i in range(check.random_potentials):
            metric = _random_metric(rng, domain, check)
            cases.append((f"n={n} random{i}", metric, flat))
        for i in range(check.curved_pairs):
            omega = _random_metric(rng, domain, check)
            omega_prime = _random_metric(rng, domain, check)
            cases.append((f"n={n} curved{i}", omega_prime, omega))
    return cases


def cmd_check(config_file: str, env_file: str | None = None) -> int:
    """Run every identity check on a seeded suite of metrics.

    Returns:
        0 if every check passes, 1 if any fails, 4 on a config error
    """
    config = _load_run_config(config_file, env_file)
    if config is None:
        return EXIT_CONFIG
    if config.check is None:
        config = config.model_copy(update={"check": CheckConfig()})
    assert config.check is not None

    try:
        cases = check_cases(config)
    except DomainError as e:
        logger.error(f"Invalid check setup: {e}")
        return EXIT_CONFIG

    results: list[dict[str, Any]] = []
    all_passed = True
    for label, omega_prime, omega in cases:
        data = cohomology.torus_cohomology(omega.domain)
        try:
            reports = run_all_checks(
                omega_prime, omega, data, green_sign=config.check.green_sign
            )
        except NotKahlerError as e:
            logger.error(f"{label}: {e}")
            reports = [
                IdentityReport(
                    name="positivity",
                    residual_sup=float("inf"),
                    residual_l2=float("inf"),
                    tolerance=0.0,
                    passed=False,
                )
            ]
        for report in reports:
            all_passed = all_passed and report.passed
            if not report.passed:
                logger.warning(
                    f"{label}: {report.name} failed (residual {report.residual_sup:.3e})"
                )
            results.append({"case": label, **report.model_dump(mode="json")})

    failed = sum(1 for r in results if not r["passed"])
    path = _output_path(config, config.output.check_report)
    write_json(
        path,
        json.dumps({"passed": all_passed, "failed": failed, "results": results}, indent=2),
    )
    logger.info(f"Checks completed: {len(results) - failed} passed, {failed} failed; wrote {path}")
    return EXIT_OK if all_passed else EXIT_FAILED


def cmd_cohomology(
    n: int, c1w: float, c1sq: float, wn: float, epsilon: float = 0.0
) -> int:
    """Print μ, Ψ and class flags as JSON on stdout.

    Returns:
        0 on success, 4 on invalid pairings
    """
    try:
        data = CohomologyData(n=n, c1_w_nm1=c1w, c1sq_w_nm2=c1sq, w_n=wn)
        summary = cohomology.summarize_class(data, epsilon)
    except (ValidationError, CohomologyError) as e:
        logger.error(f"Invalid intersection data: {e}")
        return EXIT_CONFIG
    print(summary.model_dump_json(indent=2))
    for note in summary.notes:
        logger.info(note)
    return EXIT_OK
