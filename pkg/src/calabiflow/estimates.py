"""Pointwise checks of the identities and inequalities relating two metrics.

Every check takes a pair (ω′, ω) on the same domain, with F = log(ω′ⁿ/ωⁿ),
and returns an IdentityReport. Identities report the residual of
left side minus right side; inequalities report a signed margin that is
negative where the inequality is violated.

The fields shared by the checks are bundled in a PairGeometry, so
run_all_checks evaluates each curvature once per pair.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from loguru import logger

from calabiflow.exceptions import DomainError
from calabiflow.functionals import decomposition_check, log_volume_ratio
from calabiflow.geometry import (
    CurvatureBundle,
    MatrixField,
    MetricField,
    ScalarField,
    complex_hessian,
    curvature,
    integrate,
    laplacian,
    relative_eigenvalues,
    trace,
)
from calabiflow.models import CohomologyData, IdentityReport

IDENTITY_TOLERANCE = 1e-9
GREEN_TOLERANCE = 1e-10
INEQUALITY_TOLERANCE = 1e-12
JENSEN_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class PairGeometry:
    """F, ∂∂̄F and the curvature of both metrics of a pair."""

    omega_prime: MetricField
    omega: MetricField
    F: ScalarField
    hessian_F: MatrixField
    curv: CurvatureBundle
    curv_prime: CurvatureBundle

    @classmethod
    def build(cls, omega_prime: MetricField, omega: MetricField) -> "PairGeometry":
        """Evaluate the shared fields of (ω′, ω).

        Raises:
            DomainError: If the metrics live on different domains
        """
        _same_domain(omega_prime, omega)
        F = log_volume_ratio(omega_prime, omega)
        return cls(
            omega_prime,
            omega,
            F,
            complex_hessian(F, omega.domain),
            curvature(omega),
            curvature(omega_prime),
        )


def _geometry(
    omega_prime: MetricField, omega: MetricField, pair: PairGeometry | None
) -> PairGeometry:
    if pair is None:
        return PairGeometry.build(omega_prime, omega)
    if pair.omega_prime is not omega_prime or pair.omega is not omega:
        raise DomainError("precomputed pair geometry belongs to other metrics")
    return pair


def _volume_ratio(
    omega_prime: MetricField, omega: MetricField, pair: PairGeometry | None
) -> ScalarField:
    if pair is None:
        return log_volume_ratio(omega_prime, omega)
    return _geometry(omega_prime, omega, pair).F


def _identity_report(
    name: str, residual: npt.NDArray, metric: MetricField, tolerance: float
) -> IdentityReport:
    """Summarize a residual field (scalar or matrix valued) as sup and L² norms."""
    magnitude = np.abs(residual)
    if magnitude.ndim > metric.domain.real_dim:
        magnitude = np.max(magnitude, axis=(-2, -1))
    sup = float(np.max(magnitude))
    l2 = float(np.sqrt(integrate(magnitude**2, metric) / integrate(1.0, metric)))
    passed = bool(sup <= tolerance)
    if not passed:
        logger.debug(f"{name} failed: residual {sup:.3e} > {tolerance:.1e}")
    return IdentityReport(
        name=name, residual_sup=sup, residual_l2=l2, tolerance=tolerance, passed=passed
    )


def _inequality_report(
    name: str, slack: ScalarField | float, metric: MetricField, tolerance: float
) -> IdentityReport:
    """Summarize a slack field where the inequality reads slack >= 0."""
    slack = np.asarray(slack, dtype=np.float64)
    margin = float(np.min(slack))
    violation = np.maximum(-slack, 0.0)
    l2 = float(
        np.sqrt(
            integrate(np.broadcast_to(violation, metric.domain.shape) ** 2, metric)
            / integrate(1.0, metric)
        )
    )
    passed = bool(margin >= -tolerance)
    if not passed:
        logger.debug(f"{name} failed: margin {margin:.3e}")
    return IdentityReport(
        name=name,
        residual_sup=max(-margin, 0.0),
        residual_l2=l2,
        tolerance=tolerance,
        passed=passed,
        margin=margin,
    )


def _same_domain(omega_prime: MetricField, omega: MetricField) -> None:
    if omega_prime.domain != omega.domain:
        raise DomainError("metrics live on different domains")


def check_laplace_F(
    omega_prime: MetricField,
    omega: MetricField,
    tolerance: float = IDENTITY_TOLERANCE,
    pair: PairGeometry | None = None,
) -> IdentityReport:
    """ΔF = R(ω) - g^{ij̄}R′_{ij̄}, with Δ and the trace taken against ω."""
    pair = _geometry(omega_prime, omega, pair)
    residual = trace(omega, pair.hessian_F) - (
        pair.curv.scalar - trace(omega, pair.curv_prime.ricci)
    )
    return _identity_report("laplace_F", residual, omega, tolerance)


def _green_symbol(omega: MetricField, sign: float) -> npt.NDArray[np.float64]:
    """Ĝ(k) = -1/(V·λ_k) for k != 0 and Ĝ(0) = 0."""
    domain = omega.domain
    eigenvalues = domain.laplacian_symbol
    symbol = np.zeros(domain.spectral_shape)
    nonzero = eigenvalues != 0.0
    symbol[nonzero] = -1.0 / (domain.background_volume * eigenvalues[nonzero])
    return sign * symbol


def check_greens(
    omega: MetricField,
    f: npt.ArrayLike,
    tolerance: float = GREEN_TOLERANCE,
    green_sign: float = 1.0,
) -> IdentityReport:
    """Green's representation f(x) = f̲ - ∫Δf(y)G(x, y)ωⁿ(y) on the flat torus.

    Args:
        omega: The flat background metric
        f: Scalar field on the grid
        tolerance: Bound on the sup residual
        green_sign: Multiplier on the Green's function (-1 corrupts it)

    Returns:
        IdentityReport over all grid points

    Raises:
        DomainError: If omega is not the flat background
    """
    if not omega.is_flat:
        raise DomainError("the Green's function is only available for the flat metric")
    domain = omega.domain
    values = np.asarray(f, dtype=np.float64)
    if values.shape != domain.shape:
        raise DomainError(f"field shape {values.shape} != grid {domain.shape}")
    volume = integrate(1.0, omega)
    mean = integrate(values, omega) / volume
    lap = laplacian(omega, values)
    # On the flat torus ∫h(y)G(x - y)ωⁿ(y) is V·Σ ĥ_k Ĝ_k e^{ik·x}
    convolution = domain.inverse(
        domain.forward(lap) * volume * _green_symbol(omega, green_sign)
    )
    residual = values - (mean - convolution)
    return _identity_report("greens", residual, omega, tolerance)




def check_dual_laplace_F(
    omega_prime: MetricField,
    omega: MetricField,
    tolerance: float = IDENTITY_TOLERANCE,
    pair: PairGeometry | None = None,
) -> IdentityReport:
    """Δ′F = g′^{ij̄}R_{ij̄} - R(ω′), with Δ′ the Laplacian of ω′."""
    pair = _geometry(omega_prime, omega, pair)
    residual = trace(omega_prime, pair.hessian_F) - (
        trace(omega_prime, pair.curv.ricci) - pair.curv_prime.scalar
    )
    return _identity_report("dual_laplace_F", residual, omega, tolerance)


def check_ricci_difference(
    omega_prime: MetricField,
    omega: MetricField,
    tolerance: float = IDENTITY_TOLERANCE,
    pair: PairGeometry | None = None,
) -> IdentityReport:
    """∂_i∂_{j̄}F = R_{ij̄} - R′_{ij̄}, entrywise."""
    pair = _geometry(omega_prime, omega, pair)
    residual = pair.hessian_F - (pair.curv.ricci - pair.curv_prime.ricci)
    return _identity_report("ricci_difference", residual, omega, tolerance)


def check_hessian_lower_bound(
    omega_prime: MetricField,
    omega: MetricField,
    tolerance: float = IDENTITY_TOLERANCE,
    pair: PairGeometry | None = None,
) -> IdentityReport:
    """∂∂̄F >= Ric(ω) - K₂ω with K₂ the largest eigenvalue of Ric(ω′) against ω."""
    pair = _geometry(omega_prime, omega, pair)
    k2 = float(np.max(relative_eigenvalues(pair.curv_prime.ricci, omega)))
    gap = pair.hessian_F - pair.curv.ricci + k2 * omega.g
    slack = relative_eigenvalues(gap, omega)[..., 0]
    return _inequality_report("hessian_lower_bound", slack, omega, tolerance)


def check_amgm(
    omega_prime: MetricField,
    omega: MetricField,
    tolerance: float = INEQUALITY_TOLERANCE,
    pair: PairGeometry | None = None,
) -> IdentityReport:
    """e^F >= (n / g′^{ij̄}g_{ij̄})ⁿ pointwise."""
    n = omega.domain.n
    F = _volume_ratio(omega_prime, omega, pair)
    slack = np.exp(F) - (n / trace(omega_prime, omega.g)) ** n
    return _inequality_report("amgm", slack, omega, tolerance)


def check_jensen(
    omega_prime: MetricField,
    omega: MetricField,
    tolerance: float = JENSEN_TOLERANCE,
    pair: PairGeometry | None = None,
) -> IdentityReport:
    """(1/V)∫F ωⁿ <= 0 for ω′ in the class of ω."""
    F = _volume_ratio(omega_prime, omega, pair)
    mean = integrate(F, omega) / integrate(1.0, omega)
    return _inequality_report("jensen", -mean, omega, tolerance)


def check_volume_ratio_crossing(
    omega_prime: MetricField,
    omega: MetricField,
    tolerance: float = INEQUALITY_TOLERANCE,
    pair: PairGeometry | None = None,
) -> IdentityReport:
    """min F <= 0 <= max F for ω′ in the class of ω (F vanishes somewhere)."""
    F = _volume_ratio(omega_prime, omega, pair)
    margin = min(-float(np.min(F)), float(np.max(F)))
    return _inequality_report("volume_ratio_crossing", margin, omega, tolerance)


def decomposition_report(
    omega_prime: MetricField,
    data: CohomologyData,
    curv: CurvatureBundle | None = None,
) -> IdentityReport:
    """Ca = ∫|Ric - (μ/n)ω|²ωⁿ + Ψ as an IdentityReport."""
    energy = decomposition_check(omega_prime, data, curv)
    residual = abs(energy.decomposition_residual)
    return IdentityReport(
        name="decomposition",
        residual_sup=residual,
        residual_l2=residual,
        tolerance=energy.tolerance,
        passed=energy.passed,
    )


def run_all_checks(
    omega_prime: MetricField,
    omega: MetricField,
    data: CohomologyData | None = None,
    green_sign: float = 1.0,
) -> list[IdentityReport]:
    """Run every check on one pair of metrics.

    The Green's representation is checked on F when ω is flat, and the
    energy decomposition on ω′ when intersection data is supplied.

    Args:
        omega_prime: Metric in the class of omega
        omega: Reference metric
        data: Intersection data of the class, if available
        green_sign: Multiplier on the Green's function

    Returns:
        One report per check
    """
    pair = PairGeometry.build(omega_prime, omega)
    reports = [
        check(omega_prime, omega, pair=pair)
        for check in (
            check_laplace_F,
            check_dual_laplace_F,
            check_ricci_difference,
            check_hessian_lower_bound,
            check_amgm,
            check_jensen,
            check_volume_ratio_crossing,
        )
    ]
    if omega.is_flat:
        reports.append(check_greens(omega, pair.F, green_sign=green_sign))
    if data is not None:
        reports.append(decomposition_report(omega_prime, data, pair.curv_prime))
    return reports
