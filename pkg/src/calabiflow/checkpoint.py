"""Binary checkpoints of a flow run and atomic file writes.

A checkpoint is an .npz archive holding the spectral coefficients of φ as
explicit little-endian complex128 and a JSON metadata string with everything
needed to continue the run exactly where it stopped.
"""

import json
import os
import sys
import uuid
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import IO, Any

import numpy as np
import numpy.typing as npt
from loguru import logger

from calabiflow.exceptions import CheckpointError, DomainError
from calabiflow.geometry import PotentialField, TorusDomain, make_domain

FORMAT_VERSION = 1
COEFF_DTYPE = np.dtype("<c16")


def atomic_write(path: str, write: Callable[[IO[Any]], None], binary: bool = False) -> None:
    """Write a file through a temporary sibling and `os.replace`.

    Args:
        path: Destination path
        write: Callback that writes the content to an open file
        binary: Open the temporary file in binary mode
    """
    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)

    temp_file_path = f"{path}.{uuid.uuid4()}.tmp"
    try:
        if binary:
            with open(temp_file_path, "wb") as f:
                write(f)
        else:
            with open(temp_file_path, "w", encoding="utf-8", newline="") as f:
                write(f)
        os.replace(temp_file_path, path)
    except Exception as write_err:
        logger.error(f"Failed during atomic write to {path}: {write_err}")
        if os.path.exists(temp_file_path):
            try:
                os.remove(temp_file_path)
            except OSError as remove_err:
                logger.error(f"Failed to remove temp file {temp_file_path}: {remove_err}")
        raise


@dataclass
class Checkpoint:
    """Resumable state of a flow run."""

    n: int
    grid_size: int
    periods: tuple[float, ...]
    coeffs: npt.NDArray[np.complex128]
    t: float
    step: int
    dt_next: float
    mu: float
    calabi: float
    config_hash: str
    monitor: dict[str, Any] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def domain(self) -> TorusDomain:
        """Domain the coefficients live on."""
        return make_domain(self.n, self.grid_size, self.periods)

    def potential(self) -> PotentialField:
        """The stored potential."""
        return PotentialField.from_coeffs(self.domain, self.coeffs)


def save_checkpoint(path: str, checkpoint: Checkpoint) -> None:
    """Write a checkpoint atomically.

    Args:
        path: Destination .npz path
        checkpoint: State to store
    """
    meta = {
        "format_version": FORMAT_VERSION,
        "endianness": "little",
        "n": checkpoint.n,
        "grid_size": checkpoint.grid_size,
        "periods": list(checkpoint.periods),
        "t": checkpoint.t,
        "step": checkpoint.step,
        "dt_next": checkpoint.dt_next,
        "mu": checkpoint.mu,
        "calabi": checkpoint.calabi,
        "config_hash": checkpoint.config_hash,
        "monitor": checkpoint.monitor,
        "summary": checkpoint.summary,
    }
    coeffs = np.ascontiguousarray(checkpoint.coeffs, dtype=COEFF_DTYPE)

    def write(f: IO[Any]) -> None:
        np.savez(f, coeffs=coeffs, meta=np.array(json.dumps(meta)))

    atomic_write(path, write, binary=True)
    logger.debug(f"checkpoint written to {path} at step {checkpoint.step}")


def load_checkpoint(path: str) -> Checkpoint:
    """Read and validate a checkpoint.

    Args:
        path: Path of an .npz checkpoint

    Returns:
        The stored state

    Raises:
        CheckpointError: If the file is unreadable, of an unknown version,
            or its coefficients do not match the stored grid
    """
    try:
        with np.load(path, allow_pickle=False) as archive:
            coeffs = np.array(archive["coeffs"])
            meta = json.loads(str(archive["meta"]))
    except (OSError, KeyError, ValueError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    if meta.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {meta.get('format_version')!r}"
        )
    if meta.get("endianness") != "little" or coeffs.dtype != COEFF_DTYPE:
        raise CheckpointError(f"unexpected coefficient layout {coeffs.dtype.str}")

    try:
        checkpoint = Checkpoint(
            n=int(meta["n"]),
            grid_size=int(meta["grid_size"]),
            periods=tuple(float(p) for p in meta["periods"]),
            coeffs=coeffs.astype(np.complex128),
            t=float(meta["t"]),
            step=int(meta["step"]),
            dt_next=float(meta["dt_next"]),
            mu=float(meta["mu"]),
            calabi=float(meta["calabi"]),
            config_hash=str(meta["config_hash"]),
            monitor=dict(meta["monitor"]),
            summary=dict(meta.get("summary", {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"incomplete checkpoint metadata: {e}") from e

    try:
        domain = checkpoint.domain
    except DomainError as e:
        raise CheckpointError(f"invalid checkpoint domain: {e}") from e
    if checkpoint.coeffs.shape != domain.spectral_shape:
        raise CheckpointError(
            f"coefficient shape {checkpoint.coeffs.shape} does not match "
            f"N={checkpoint.grid_size}, n={checkpoint.n}"
        )
    logger.info(
        f"Loaded checkpoint {path}: step {checkpoint.step}, t={checkpoint.t:.6g} "
        f"({sys.byteorder}-endian host)"
    )
    return checkpoint
