"""Tests for the functionals module."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from calabiflow.cohomology import torus_cohomology
from calabiflow.exceptions import CohomologyError, DomainError
from calabiflow.functionals import (
    calabi_energy,
    decomposition_check,
    log_volume_ratio,
    ricci_deviation_energy,
)
from calabiflow.geometry import (
    MetricField,
    TorusDomain,
    curvature,
    integrate,
    make_domain,
    metric_from_potential,
    potential_from_modes,
)
from calabiflow.models import CohomologyData


class TestCalabiEnergy:
    """Test the Calabi energy and the Ricci deviation energy."""

    def test_flat(self, domain_2d: TorusDomain) -> None:
        """Test that the flat metric has zero energy."""
        flat = MetricField.flat(domain_2d)
        assert calabi_energy(flat, 0.0) == 0.0
        assert ricci_deviation_energy(flat, 0.0) == 0.0

    def test_flat_with_mu(self, domain_1d: TorusDomain) -> None:
        """Test Ca = μ²V when R = 0."""
        assert calabi_energy(MetricField.flat(domain_1d), 2.0) == pytest.approx(4.0)

    def test_single_mode(self, domain_1d: TorusDomain) -> None:
        """Test Ca ≈ π⁸a²V/2 for a small cosine potential."""
        a = 1e-4
        metric = metric_from_potential(
            domain_1d, potential_from_modes(domain_1d, [((1, 0), a)])
        )
        assert calabi_energy(metric, 0.0) == pytest.approx(
            math.pi**8 * a**2 / 2, rel=1e-4
        )

    def test_deviation_equals_calabi_in_dimension_one(
        self, cosine_metric: MetricField
    ) -> None:
        """Test |Ric|² = R² when n = 1."""
        assert ricci_deviation_energy(cosine_metric, 0.0) == pytest.approx(
            calabi_energy(cosine_metric, 0.0), rel=1e-12
        )

    def test_quadratic_scaling(self, domain_1d: TorusDomain) -> None:
        """Test Ca ∝ a² in the linear regime."""
        energies = [
            calabi_energy(
                metric_from_potential(
                    domain_1d, potential_from_modes(domain_1d, [((1, 0), a)])
                ),
                0.0,
            )
            for a in (1e-5, 1e-4)
        ]
        assert energies[1] / energies[0] == pytest.approx(100.0, rel=1e-4)

    @pytest.mark.parametrize("mu, shift", [(0.0, 0.7), (0.3, -1.25)])
    def test_mu_shift(
        self, random_metric_2d: MetricField, mu: float, shift: float
    ) -> None:
        """Test Ca(μ + c) = Ca(μ) + c²V - 2c∫(R - μ)ωⁿ."""
        curv = curvature(random_metric_2d)
        volume = integrate(1.0, random_metric_2d)
        deviation = integrate(curv.scalar - mu, random_metric_2d)
        expected = (
            calabi_energy(random_metric_2d, mu, curv)
            + shift**2 * volume
            - 2 * shift * deviation
        )
        assert calabi_energy(random_metric_2d, mu + shift, curv) == pytest.approx(
            expected, rel=1e-10
        )

    def test_refinement(self) -> None:
        """Test that Ca at N and 2N agree to spectral accuracy."""
        modes = [((1, 0), 0.02), ((1, 1), -0.01)]
        energies = []
        for grid_size in (64, 128):
            domain = make_domain(1, grid_size)
            metric = metric_from_potential(domain, potential_from_modes(domain, modes))
            energies.append(calabi_energy(metric, 0.0))
        assert energies[0] > 1.0
        assert energies[1] == pytest.approx(energies[0], rel=1e-10)


class TestLogVolumeRatio:
    """Test F = log(ω′ⁿ/ωⁿ)."""

    def test_same_metric(self, cosine_metric: MetricField) -> None:
        """Test F = 0 for identical metrics."""
        assert not np.any(log_volume_ratio(cosine_metric, cosine_metric))

    def test_scaled_metric(self, domain_2d: TorusDomain) -> None:
        """Test F = n·log c for ω′ = cω."""
        flat = MetricField.flat(domain_2d)
        F = log_volume_ratio(flat.scaled(3.0), flat)
        np.testing.assert_allclose(F, 2 * math.log(3.0), atol=1e-14)

    def test_domain_mismatch(self, cosine_metric: MetricField) -> None:
        """Test that metrics on different grids are rejected."""
        with pytest.raises(DomainError):
            log_volume_ratio(cosine_metric, MetricField.flat(make_domain(1, 32)))


class TestDecomposition:
    """Test Ca = ∫|Ric - (μ/n)ω|²ωⁿ + Ψ."""

    def test_dimension_one(self, domain_1d: TorusDomain, cosine_metric: MetricField) -> None:
        """Test the decomposition with Ψ = 0 in dimension one."""
        report = decomposition_check(cosine_metric, torus_cohomology(domain_1d))
        assert report.psi == 0.0
        assert report.mu == 0.0
        assert report.passed

    def test_dimension_two(
        self, domain_2d: TorusDomain, random_metric_2d: MetricField
    ) -> None:
        """Test the decomposition on a random metric in dimension two."""
        report = decomposition_check(random_metric_2d, torus_cohomology(domain_2d))
        assert report.calabi > 0
        # Ψ = 0 on the torus, so the two energies coincide
        assert report.ricci_deviation == pytest.approx(report.calabi, rel=1e-8)
        assert abs(report.decomposition_residual) <= 1e-8 * report.calabi
        assert report.passed

    def test_product_metric(self) -> None:
        """Test a product potential against the two one-dimensional factors."""
        a1, a2 = 2e-3, 1e-3
        domain = make_domain(2, 16)
        line = make_domain(1, 16)
        product = metric_from_potential(
            domain,
            potential_from_modes(domain, [((1, 0, 0, 0), a1), ((0, 0, 2, 0), a2)]),
        )
        first = metric_from_potential(line, potential_from_modes(line, [((1, 0), a1)]))
        second = metric_from_potential(line, potential_from_modes(line, [((2, 0), a2)]))
        # Each factor has unit area, and ωⁿ on the product carries n! = 2
        expected = 2 * (calabi_energy(first, 0.0) + calabi_energy(second, 0.0))
        assert calabi_energy(product, 0.0) == pytest.approx(expected, rel=1e-10)
        assert ricci_deviation_energy(product, 0.0) == pytest.approx(expected, rel=1e-10)

    def test_dimension_mismatch(self, cosine_metric: MetricField) -> None:
        """Test that data of another dimension is rejected."""
        with pytest.raises(CohomologyError):
            decomposition_check(cosine_metric, CohomologyData(n=2))

    def test_nonzero_c1_warns(self, domain_1d: TorusDomain, cosine_metric: MetricField) -> None:
        """Test the warning for non-torus pairings on a flat torus."""
        data = CohomologyData(n=1, c1_w_nm1=1.0, w_n=1.0)
        with patch("calabiflow.functionals.logger") as mock_logger:
            report = decomposition_check(cosine_metric, data)
        mock_logger.warning.assert_called_once()
        assert report.mu == pytest.approx(math.pi)
        # Still an identity, since Ψ = 0 and ∫R ωⁿ = 0 on the torus
        assert report.passed
