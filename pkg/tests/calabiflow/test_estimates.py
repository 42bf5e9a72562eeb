"""Tests for the estimates module."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from calabiflow.cohomology import torus_cohomology
from calabiflow.estimates import (
    PairGeometry,
    check_amgm,
    check_dual_laplace_F,
    check_greens,
    check_hessian_lower_bound,
    check_jensen,
    check_laplace_F,
    check_ricci_difference,
    check_volume_ratio_crossing,
    decomposition_report,
    run_all_checks,
)
from calabiflow.exceptions import DomainError
from calabiflow.functionals import log_volume_ratio
from calabiflow.geometry import (
    MetricField,
    TorusDomain,
    make_domain,
    metric_from_potential,
    potential_from_modes,
)

IDENTITIES = [check_laplace_F, check_dual_laplace_F, check_ricci_difference]
IN_CLASS_INEQUALITIES = [
    check_hessian_lower_bound,
    check_amgm,
    check_jensen,
    check_volume_ratio_crossing,
]


@pytest.fixture
def second_metric_2d(domain_2d: TorusDomain) -> MetricField:
    """Another metric in the background class, used as a non-flat reference."""
    phi = potential_from_modes(
        domain_2d, [((0, 1, 1, 0), 4e-4), ((1, 0, 0, -1), -3e-4)]
    )
    return metric_from_potential(domain_2d, phi)


class TestIdentities:
    """Test the identities relating two metrics in one class."""

    @pytest.mark.parametrize("check", IDENTITIES)
    def test_against_flat(
        self, check, domain_2d: TorusDomain, random_metric_2d: MetricField
    ) -> None:
        """Test each identity for a random metric against the flat one."""
        report = check(random_metric_2d, MetricField.flat(domain_2d))
        assert report.passed
        assert report.residual_sup <= 1e-9
        assert report.margin is None

    @pytest.mark.parametrize("check", IDENTITIES)
    def test_two_curved_metrics(
        self,
        check,
        random_metric_2d: MetricField,
        second_metric_2d: MetricField,
    ) -> None:
        """Test each identity when neither metric is flat."""
        assert check(random_metric_2d, second_metric_2d).passed
        assert check(second_metric_2d, random_metric_2d).passed

    @pytest.mark.parametrize("check", IDENTITIES)
    def test_dimension_one(self, check, domain_1d: TorusDomain) -> None:
        """Test each identity in dimension one at a larger amplitude."""
        phi = potential_from_modes(domain_1d, [((1, 0), 5e-3), ((2, -1), 2e-3)])
        report = check(metric_from_potential(domain_1d, phi), MetricField.flat(domain_1d))
        assert report.passed

    def test_laplace_F_nonzero_terms(
        self, domain_1d: TorusDomain, cosine_metric: MetricField
    ) -> None:
        """Test that ΔF is far from zero while the residual vanishes."""
        flat = MetricField.flat(domain_1d)
        F = log_volume_ratio(cosine_metric, flat)
        assert np.max(np.abs(F)) > 1e-3
        assert check_laplace_F(cosine_metric, flat).residual_sup < 1e-9

    def test_domain_mismatch(self, cosine_metric: MetricField) -> None:
        """Test that metrics on different grids are rejected."""
        other = MetricField.flat(make_domain(1, 32))
        for check in IDENTITIES + IN_CLASS_INEQUALITIES:
            with pytest.raises(DomainError):
                check(cosine_metric, other)

    def test_failure_is_logged(self, domain_1d: TorusDomain) -> None:
        """Test that a failing identity reports and logs its residual."""
        x, _ = domain_1d.coordinates()
        f = np.broadcast_to(np.cos(2 * np.pi * x), domain_1d.shape)
        with patch("calabiflow.estimates.logger") as mock_logger:
            report = check_greens(MetricField.flat(domain_1d), f, green_sign=-1.0)
        assert not report.passed
        mock_logger.debug.assert_called_once()

    def test_ricci_difference_implies_laplace_F(
        self, random_metric_2d: MetricField, second_metric_2d: MetricField
    ) -> None:
        """Test that the traced Ricci identity gives the ΔF identity."""
        ricci_report = check_ricci_difference(random_metric_2d, second_metric_2d)
        laplace_report = check_laplace_F(random_metric_2d, second_metric_2d)
        assert ricci_report.passed and laplace_report.passed
        # |g^{ij̄}A_{ij̄}| <= n²·max|g^{ij̄}|·max|A_{ij̄}|
        g_inv_max = float(np.max(np.abs(second_metric_2d.g_inv)))
        bound = 4 * g_inv_max * ricci_report.residual_sup
        assert laplace_report.residual_sup <= bound + 1e-15

    def test_shared_pair_geometry(
        self, random_metric_2d: MetricField, second_metric_2d: MetricField
    ) -> None:
        """Test that precomputed pair fields give the same reports."""
        pair = PairGeometry.build(random_metric_2d, second_metric_2d)
        for check in IDENTITIES + IN_CLASS_INEQUALITIES:
            assert check(random_metric_2d, second_metric_2d, pair=pair) == check(
                random_metric_2d, second_metric_2d
            )
        with pytest.raises(DomainError):
            check_laplace_F(second_metric_2d, random_metric_2d, pair=pair)


class TestGreens:
    """Test the Green's representation on the flat torus."""

    def test_trigonometric_field(self, domain_1d: TorusDomain) -> None:
        """Test f = 1 + cos(2πx) + ½sin(2π(x + 2y))."""
        x, y = domain_1d.coordinates()
        f = np.broadcast_to(
            1.0 + np.cos(2 * np.pi * x) + 0.5 * np.sin(2 * np.pi * (x + 2 * y)),
            domain_1d.shape,
        )
        report = check_greens(MetricField.flat(domain_1d), f)
        assert report.passed
        assert report.residual_sup < 1e-10

    def test_dimension_two(self, domain_2d: TorusDomain, random_metric_2d: MetricField) -> None:
        """Test the representation of log volume ratio in dimension two."""
        flat = MetricField.flat(domain_2d)
        assert check_greens(flat, log_volume_ratio(random_metric_2d, flat)).passed

    def test_wrong_sign_fails(self, domain_1d: TorusDomain) -> None:
        """Test that flipping the Green's function sign breaks the identity."""
        x, _ = domain_1d.coordinates()
        f = np.broadcast_to(np.cos(2 * np.pi * x), domain_1d.shape)
        report = check_greens(MetricField.flat(domain_1d), f, green_sign=-1.0)
        assert not report.passed
        # The residual becomes 2(f - f̲)
        assert report.residual_sup == pytest.approx(2.0, rel=1e-12)

    def test_constant_field(self, domain_1d: TorusDomain) -> None:
        """Test that a constant is its own mean under either sign."""
        f = np.full(domain_1d.shape, 3.0)
        flat = MetricField.flat(domain_1d)
        assert check_greens(flat, f).passed
        assert check_greens(flat, f, green_sign=-1.0).passed

    def test_requires_flat_metric(self, cosine_metric: MetricField) -> None:
        """Test that a curved metric is rejected."""
        with pytest.raises(DomainError):
            check_greens(cosine_metric, np.zeros(cosine_metric.domain.shape))

    def test_shape_mismatch(self, domain_1d: TorusDomain) -> None:
        """Test that a field of the wrong shape is rejected."""
        with pytest.raises(DomainError):
            check_greens(MetricField.flat(domain_1d), np.zeros((4, 4)))


class TestInequalities:
    """Test the inequalities and their margins."""

    @pytest.mark.parametrize("check", IN_CLASS_INEQUALITIES)
    def test_in_class(
        self, check, domain_2d: TorusDomain, random_metric_2d: MetricField
    ) -> None:
        """Test each inequality for a metric in the flat class."""
        report = check(random_metric_2d, MetricField.flat(domain_2d))
        assert report.passed
        assert report.margin is not None

    @pytest.mark.parametrize("check", IN_CLASS_INEQUALITIES)
    def test_two_curved_metrics(
        self,
        check,
        random_metric_2d: MetricField,
        second_metric_2d: MetricField,
    ) -> None:
        """Test each inequality when the reference is curved too."""
        assert check(random_metric_2d, second_metric_2d).passed

    def test_jensen_strict(self, domain_2d: TorusDomain, random_metric_2d: MetricField) -> None:
        """Test that the mean of F is strictly negative for a non-flat metric."""
        report = check_jensen(random_metric_2d, MetricField.flat(domain_2d))
        assert report.margin is not None
        assert report.margin > 0.0
        assert report.residual_sup == 0.0

    def test_hessian_bound_is_sharp(
        self, domain_2d: TorusDomain, random_metric_2d: MetricField
    ) -> None:
        """Test that the margin is attained where Ric′ reaches K₂."""
        report = check_hessian_lower_bound(random_metric_2d, MetricField.flat(domain_2d))
        assert report.margin is not None
        assert report.margin == pytest.approx(0.0, abs=1e-9)

    def test_crossing_margin(self, domain_1d: TorusDomain, cosine_metric: MetricField) -> None:
        """Test that F takes both signs for a metric in the class."""
        flat = MetricField.flat(domain_1d)
        F = log_volume_ratio(cosine_metric, flat)
        report = check_volume_ratio_crossing(cosine_metric, flat)
        assert report.margin == pytest.approx(min(-F.min(), F.max()))
        assert report.margin > 0.0

    @pytest.mark.parametrize("n", [1, 2])
    def test_scaled_metric(self, n: int) -> None:
        """Test ω′ = 2ω: AM-GM holds with equality, class conditions fail."""
        flat = MetricField.flat(make_domain(n, 16))
        doubled = flat.scaled(2.0)
        amgm = check_amgm(doubled, flat)
        assert amgm.passed
        assert amgm.margin == pytest.approx(0.0, abs=1e-12)
        jensen = check_jensen(doubled, flat)
        assert not jensen.passed
        assert jensen.margin == pytest.approx(-n * math.log(2.0))
        assert not check_volume_ratio_crossing(doubled, flat).passed

    def test_violation_l2(self, domain_1d: TorusDomain) -> None:
        """Test that the L² violation is reported for a failed inequality."""
        flat = MetricField.flat(domain_1d)
        report = check_jensen(flat.scaled(3.0), flat)
        assert report.residual_sup == pytest.approx(math.log(3.0))
        assert report.residual_l2 == pytest.approx(math.log(3.0))

    @pytest.mark.parametrize(
        "matrix, proportional",
        [
            ([[3.0, 0.0], [0.0, 3.0]], True),
            ([[0.5, 0.0], [0.0, 0.5]], True),
            ([[2.0, 0.0], [0.0, 0.5]], False),
            ([[1.0, 0.3j], [-0.3j, 1.0]], False),
            ([[1.2, 0.1 + 0.2j], [0.1 - 0.2j, 0.9]], False),
        ],
    )
    def test_amgm_equality_only_for_proportional(
        self, domain_2d: TorusDomain, matrix: list, proportional: bool
    ) -> None:
        """Test that AM-GM is an equality exactly when ω′ = cω."""
        flat = MetricField.flat(domain_2d)
        g = np.broadcast_to(
            np.array(matrix, dtype=np.complex128), domain_2d.shape + (2, 2)
        )
        report = check_amgm(MetricField.from_matrix(domain_2d, g), flat)
        assert report.passed
        assert report.margin is not None
        if proportional:
            assert report.margin == pytest.approx(0.0, abs=1e-12)
        else:
            assert report.margin > 1e-3

    def test_amgm_strict_against_curved_reference(
        self, random_metric_2d: MetricField
    ) -> None:
        """Test strict AM-GM for ω′ anisotropic against a curved ω."""
        omega = random_metric_2d
        omega_prime = MetricField.from_matrix(
            omega.domain, omega.g + np.diag([0.5, 0.0]).astype(np.complex128)
        )
        report = check_amgm(omega_prime, omega)
        assert report.margin is not None
        assert report.margin > 1e-3


class TestRunAllChecks:
    """Test the combined check run."""

    def test_flat_reference_with_data(
        self, domain_2d: TorusDomain, random_metric_2d: MetricField
    ) -> None:
        """Test that every check runs and passes against the flat metric."""
        reports = run_all_checks(
            random_metric_2d, MetricField.flat(domain_2d), torus_cohomology(domain_2d)
        )
        assert [r.name for r in reports] == [
            "laplace_F",
            "dual_laplace_F",
            "ricci_difference",
            "hessian_lower_bound",
            "amgm",
            "jensen",
            "volume_ratio_crossing",
            "greens",
            "decomposition",
        ]
        assert all(r.passed for r in reports)

    def test_curved_reference(
        self, random_metric_2d: MetricField, second_metric_2d: MetricField
    ) -> None:
        """Test that the Green's check is skipped for a curved reference."""
        reports = run_all_checks(random_metric_2d, second_metric_2d)
        names = [r.name for r in reports]
        assert "greens" not in names
        assert "decomposition" not in names
        assert all(r.passed for r in reports)

    def test_wrong_green_sign_fails_only_greens(
        self, domain_1d: TorusDomain, cosine_metric: MetricField
    ) -> None:
        """Test that the fault injection is caught by the Green's check alone."""
        reports = run_all_checks(
            cosine_metric,
            MetricField.flat(domain_1d),
            torus_cohomology(domain_1d),
            green_sign=-1.0,
        )
        failed = [r.name for r in reports if not r.passed]
        assert failed == ["greens"]

    def test_flat_pair(self, domain_1d: TorusDomain) -> None:
        """Test the trivial pair (ω, ω)."""
        flat = MetricField.flat(domain_1d)
        reports = run_all_checks(flat, flat, torus_cohomology(domain_1d), green_sign=-1.0)
        assert all(r.passed for r in reports)

    def test_decomposition_report(
        self, domain_1d: TorusDomain, cosine_metric: MetricField
    ) -> None:
        """Test the decomposition as an identity report."""
        report = decomposition_report(cosine_metric, torus_cohomology(domain_1d))
        assert report.name == "decomposition"
        assert report.passed
        assert report.residual_sup == report.residual_l2

    def test_decomposition_residual_decays_under_refinement(self) -> None:
        """Test residual(2N) <= 1e-3·residual(N) for the energy decomposition."""
        residuals = []
        for grid_size in (8, 16):
            domain = make_domain(2, grid_size)
            # det g = 1 - 2π²a·cos 2π(x₁ + x₂), so log det g is not band-limited
            phi = potential_from_modes(domain, [((1, 0, 1, 0), 0.2 / math.pi**2)])
            report = decomposition_report(
                metric_from_potential(domain, phi), torus_cohomology(domain)
            )
            residuals.append(report.residual_sup)
        assert residuals[0] > 1e-8
        assert residuals[1] <= 1e-3 * residuals[0]
