"""Common test fixtures and utilities."""

import json
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from calabiflow.config import OUTPUT_DIR_ENV
from calabiflow.geometry import (
    MetricField,
    PotentialField,
    TorusDomain,
    make_domain,
    metric_from_potential,
    potential_from_modes,
)


@pytest.fixture(autouse=True)
def clean_output_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep a developer's output override out of the tests."""
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


@pytest.fixture
def domain_1d() -> TorusDomain:
    """Unit torus of complex dimension one on a 64x64 grid."""
    return make_domain(1, 64)


@pytest.fixture
def domain_2d() -> TorusDomain:
    """Unit torus of complex dimension two on a 16^4 grid."""
    return make_domain(2, 16)


@pytest.fixture
def cosine_potential(domain_1d: TorusDomain) -> PotentialField:
    """φ = 1e-3·cos(2πx) on the one-dimensional torus."""
    return potential_from_modes(domain_1d, [((1, 0), 1e-3)])


@pytest.fixture
def cosine_metric(domain_1d: TorusDomain, cosine_potential: PotentialField) -> MetricField:
    """Metric of the cosine potential."""
    return metric_from_potential(domain_1d, cosine_potential)


@pytest.fixture
def random_potential_2d(domain_2d: TorusDomain) -> PotentialField:
    """Seeded small-amplitude potential with low modes in dimension two."""
    rng = np.random.default_rng(42)
    modes = []
    for _ in range(4):
        k = tuple(int(v) for v in rng.integers(-1, 2, size=4))
        if not any(k):
            k = (1, 0, 0, 0)
        modes.append((k, float(rng.uniform(-1.0, 1.0)) * 5e-4))
    return potential_from_modes(domain_2d, modes)


@pytest.fixture
def random_metric_2d(
    domain_2d: TorusDomain, random_potential_2d: PotentialField
) -> MetricField:
    """Metric of the seeded two-dimensional potential."""
    return metric_from_potential(domain_2d, random_potential_2d)


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., str]:
    """Factory writing a run config into tmp_path with outputs under tmp_path/out."""

    def _write(document: dict[str, Any], name: str = "config.json") -> str:
        document = dict(document)
        output = dict(document.get("output", {}))
        output.setdefault("directory", str(tmp_path / "out"))
        document["output"] = output
        path = tmp_path / name
        path.write_text(json.dumps(document, indent=2), encoding="utf-8")
        return str(path)

    return _write
