"""Energy functionals and the log volume ratio.

The Calabi energy here is Ca(ω) = ∫(R - μ)² ωⁿ; on any Kähler class it
splits as Ca = ∫|Ric - (μ/n)ω|² ωⁿ + Ψ with Ψ purely topological.
"""

import numpy as np
from loguru import logger

from calabiflow import cohomology
from calabiflow.exceptions import CohomologyError, DomainError
from calabiflow.geometry import (
    CurvatureBundle,
    MetricField,
    ScalarField,
    curvature,
    integrate,
)
from calabiflow.models import CohomologyData, EnergyReport

DECOMPOSITION_RTOL = 1e-8


def calabi_energy(
    metric: MetricField, mu: float, curv: CurvatureBundle | None = None
) -> float:
    """Ca = ∫(R - μ)² ωⁿ.

    Args:
        metric: The metric
        mu: Average scalar curvature of the class (0 on tori)
        curv: Precomputed curvature of `metric`, if available

    Returns:
        The nonnegative Calabi energy
    """
    curv = curv or curvature(metric)
    return max(integrate((curv.scalar - mu) ** 2, metric), 0.0)


def ricci_deviation_energy(
    metric: MetricField, mu: float, curv: CurvatureBundle | None = None
) -> float:
    """∫|Ric - (μ/n)ω|² ωⁿ with |T|² = g^{ik̄}g^{lj̄}T_{ij̄}T_{lk̄}."""
    curv = curv or curvature(metric)
    n = metric.domain.n
    tensor = curv.ricci - (mu / n) * metric.g
    mixed = metric.g_inv @ tensor
    norm_sq = np.einsum("...ij,...ji->...", mixed, mixed).real
    return max(integrate(norm_sq, metric), 0.0)


def log_volume_ratio(omega_prime: MetricField, omega: MetricField) -> ScalarField:
    """F = log(ω′ⁿ/ωⁿ) = log(det g′ / det g) pointwise."""
    if omega_prime.domain != omega.domain:
        raise DomainError("metrics live on different domains")
    return np.log(omega_prime.det_g / omega.det_g)


def decomposition_check(
    metric: MetricField,
    data: CohomologyData,
    curv: CurvatureBundle | None = None,
) -> EnergyReport:
    """Evaluate Ca, the Ricci deviation energy and Ψ independently.

    Args:
        metric: A metric on a flat torus
        data: Intersection data of its class (c₁ pairings 0 on a torus)
        curv: Precomputed curvature of `metric`, if available

    Returns:
        Report with residual Ca - (ricci_deviation + Ψ)

    Raises:
        CohomologyError: If the data dimension differs from the domain's
    """
    if data.n != metric.domain.n:
        raise CohomologyError(
            f"cohomology dimension {data.n} != domain dimension {metric.domain.n}"
        )
    if data.c1_w_nm1 != 0 or (data.n > 1 and data.c1sq_w_nm2 != 0):
        logger.warning("non-zero c₁ pairings supplied for a flat torus metric")
    curv = curv or curvature(metric)
    mu_value = cohomology.mu(data)
    psi_value = cohomology.psi(data)
    calabi = calabi_energy(metric, mu_value, curv)
    deviation = ricci_deviation_energy(metric, mu_value, curv)
    residual = calabi - (deviation + psi_value)
    return EnergyReport(
        calabi=calabi,
        ricci_deviation=deviation,
        psi=psi_value,
        mu=mu_value,
        decomposition_residual=residual,
        tolerance=DECOMPOSITION_RTOL * max(calabi, 1e-12),
    )
