"""Cohomological quantities μ and Ψ from intersection numbers.

Both quantities depend on the Kähler class only through the pairings
stored in CohomologyData; nothing here touches a metric.
"""

import math
from collections.abc import Sequence

from loguru import logger

from calabiflow.exceptions import CohomologyError
from calabiflow.geometry import TorusDomain
from calabiflow.models import CohomologyData, CohomologySummary


def _check(data: CohomologyData) -> None:
    if not data.w_n > 0:
        raise CohomologyError(f"[ω]^n must be positive, got {data.w_n}")


def mu(data: CohomologyData) -> float:
    """Average scalar curvature μ = π[c₁]·[ω]^(n-1) / [ω]^n.

    Raises:
        CohomologyError: If w_n is not positive
    """
    _check(data)
    return math.pi * data.c1_w_nm1 / data.w_n


def psi(data: CohomologyData) -> float:
    """Topological term of the Calabi energy decomposition.

    Ψ = n(n-1)π²([c₁]²·[ω]^(n-2) - ([c₁]·[ω]^(n-1))² / [ω]^n), exactly 0 for n = 1.

    Raises:
        CohomologyError: If w_n is not positive
    """
    _check(data)
    if data.n == 1:
        return 0.0
    return (
        data.n
        * (data.n - 1)
        * math.pi**2
        * (data.c1sq_w_nm2 - data.c1_w_nm1**2 / data.w_n)
    )


def _pairings(data: CohomologyData) -> list[float]:
    if data.n == 1:
        return [data.c1_w_nm1, data.w_n]
    return [data.c1_w_nm1, data.c1sq_w_nm2, data.w_n]


def class_distance(
    data_a: CohomologyData,
    data_b: CohomologyData,
    weights: Sequence[float] | None = None,
) -> float:
    """Weighted max distance between the stored pairings of two classes.

    Args:
        data_a: First class
        data_b: Second class
        weights: One positive weight per pairing, in the order
            (c1_w_nm1, c1sq_w_nm2, w_n); c1sq_w_nm2 is skipped when n = 1

    Returns:
        max_i w_i·|p_i(a) - p_i(b)|

    Raises:
        CohomologyError: On a dimension mismatch or bad weights
    """
    if data_a.n != data_b.n:
        raise CohomologyError(f"dimension mismatch: {data_a.n} != {data_b.n}")
    weights = list(weights) if weights is not None else [1.0, 1.0, 1.0]
    if len(weights) != 3 or not all(w > 0 for w in weights):
        raise CohomologyError("class_distance needs three positive weights")
    if data_a.n == 1:
        weights = [weights[0], weights[2]]
    return max(
        w * abs(pa - pb)
        for w, pa, pb in zip(weights, _pairings(data_a), _pairings(data_b))
    )


def scale_class(data: CohomologyData, t: float) -> CohomologyData:
    """Pairings of the class t·[ω]."""
    if not t > 0:
        raise CohomologyError(f"scale factor must be positive, got {t}")
    n = data.n
    return CohomologyData(
        n=n,
        c1_w_nm1=data.c1_w_nm1 * t ** (n - 1),
        c1sq_w_nm2=data.c1sq_w_nm2 * t ** (n - 2),
        w_n=data.w_n * t**n,
    )


def torus_cohomology(domain: TorusDomain) -> CohomologyData:
    """Intersection data of a flat torus: c₁ = 0, [ω]^n = V."""
    return CohomologyData(n=domain.n, w_n=domain.background_volume)


def summarize_class(data: CohomologyData, epsilon: float = 0.0) -> CohomologySummary:
    """Compute μ and Ψ and attach informational flags.

    Args:
        data: Intersection data
        epsilon: Threshold for the Ψ > -ε closeness condition (0 disables it)

    Returns:
        Summary with flags among dimension_one, c1_trivial, proportional,
        psi_positive and psi_below_minus_epsilon
    """
    mu_value = mu(data)
    psi_value = psi(data)
    flags: list[str] = []
    notes: list[str] = []
    c1_trivial = data.c1_w_nm1 == 0 and (data.n == 1 or data.c1sq_w_nm2 == 0)

    if data.n == 1:
        flags.append("dimension_one")
        notes.append("Ψ vanishes identically in complex dimension one")
    if c1_trivial:
        flags.append("c1_trivial")
        notes.append("c₁ pairs to zero with the class, as on a torus")
    elif data.n >= 2:
        scale = max(abs(data.c1sq_w_nm2), data.c1_w_nm1**2 / data.w_n)
        if abs(data.c1sq_w_nm2 - data.c1_w_nm1**2 / data.w_n) <= 1e-12 * scale:
            flags.append("proportional")
            notes.append("Ψ = 0: the class is numerically proportional to c₁")
    if psi_value > 0 and "proportional" not in flags:
        flags.append("psi_positive")
        notes.append(
            "Ψ > 0: for ±c₁ > 0 the Hodge index inequality forces Ψ <= 0, "
            "so c₁ is not definite for this data"
        )
        logger.warning(f"Ψ = {psi_value:.6g} is positive")
    if epsilon > 0 and psi_value <= -epsilon:
        flags.append("psi_below_minus_epsilon")
        notes.append(f"Ψ <= -ε with ε = {epsilon:g}: class too far for the argument")
    return CohomologySummary(
        data=data, mu=mu_value, psi=psi_value, flags=flags, notes=notes
    )
