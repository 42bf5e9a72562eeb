"""Discrete Kähler geometry on flat complex tori.

Fields live on a uniform tensor grid over the real coordinates
(x_1, y_1, ..., x_n, y_n) with z_j = x_j + i y_j. Derivatives are
pseudospectral (real FFTs); products, logarithms and matrix inverses are
evaluated pointwise in physical space.

Conventions: ω = (√-1/2) g_{ij̄} dz^i ∧ dz^{j̄}, so the flat metric is
g_{ij̄} = δ_{ij̄}, ∂_j∂_{j̄} = ¼(∂²/∂x_j² + ∂²/∂y_j²) and
ωⁿ = n!·det(g)·dx_1 dy_1 ... dx_n dy_n.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy import fft

from calabiflow.exceptions import DomainError, NotKahlerError

ScalarField = npt.NDArray[np.float64]
MatrixField = npt.NDArray[np.complex128]
SpectralField = npt.NDArray[np.complex128]
Wavevector = tuple[int, ...]
Mode = tuple[Sequence[int], float]

# Metrics whose smallest eigenvalue falls below this leave the Kähler cone
POSITIVITY_FLOOR = 1e-10
# Fraction of energy in the top third of the spectrum that triggers a warning
TAIL_FRACTION_WARNING = 1e-8

_fft_workers: int | None = None


def set_fft_workers(workers: int | None) -> None:
    """Set the number of threads used by the spectral transforms.

    Args:
        workers: Thread count passed to scipy.fft (None for single-threaded)
    """
    global _fft_workers
    _fft_workers = workers


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TorusDomain:
    """A flat complex torus of dimension n sampled on an N^(2n) grid."""

    n: int
    grid_size: int
    periods: tuple[float, ...]

    @property
    def real_dim(self) -> int:
        """Number of real axes (2n)."""
        return 2 * self.n

    @property
    def shape(self) -> tuple[int, ...]:
        """Physical grid shape."""
        return (self.grid_size,) * self.real_dim

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        """Shape of the real-FFT coefficient array."""
        return self.shape[:-1] + (self.grid_size // 2 + 1,)

    @property
    def axes(self) -> tuple[int, ...]:
        """Real axes in (x_1, y_1, ..., x_n, y_n) order."""
        return tuple(range(self.real_dim))

    @property
    def num_points(self) -> int:
        """Total number of grid points."""
        return int(self.grid_size**self.real_dim)

    @cached_property
    def background_volume(self) -> float:
        """V = ∫ωⁿ for the flat metric, n!·∏periods."""
        return math.factorial(self.n) * math.prod(self.periods)

    @cached_property
    def integer_frequencies(self) -> list[npt.NDArray[np.int64]]:
        """Integer wavevector components per axis, broadcastable to the spectrum."""
        size = self.grid_size
        freqs = []
        for axis in self.axes:
            if axis == self.real_dim - 1:
                k = np.arange(size // 2 + 1, dtype=np.int64)
            else:
                k = np.rint(np.fft.fftfreq(size, d=1.0 / size)).astype(np.int64)
            shape = [1] * self.real_dim
            shape[axis] = -1
            freqs.append(_readonly(k.reshape(shape)))
        return freqs

    @cached_property
    def wavenumbers(self) -> list[npt.NDArray[np.float64]]:
        """Angular wavenumbers 2πk/L per axis (Nyquist kept)."""
        return [
            _readonly(2.0 * np.pi * k / period)
            for k, period in zip(self.integer_frequencies, self.periods)
        ]

    @cached_property
    def mixed_wavenumbers(self) -> list[npt.NDArray[np.float64]]:
        """Wavenumbers with the Nyquist bin zeroed, for mixed derivatives."""
        nyquist = self.grid_size // 2
        return [
            _readonly(np.where(np.abs(k) == nyquist, 0.0, kappa))
            for k, kappa in zip(self.integer_frequencies, self.wavenumbers)
        ]

    @cached_property
    def laplacian_symbol(self) -> npt.NDArray[np.float64]:
        """Fourier symbol of the flat complex Laplacian Δ₀ = Σ_j ∂_j∂_{j̄}."""
        symbol = np.zeros(self.spectral_shape)
        for kappa in self.wavenumbers:
            symbol = symbol - 0.25 * kappa**2
        return _readonly(symbol)

    @cached_property
    def spectral_weights(self) -> npt.NDArray[np.float64]:
        """Multiplicity of each real-FFT bin in the full spectrum."""
        size = self.grid_size
        last = np.full(size // 2 + 1, 2.0)
        last[0] = 1.0
        last[-1] = 1.0
        shape = [1] * self.real_dim
        shape[-1] = -1
        return _readonly(np.broadcast_to(last.reshape(shape), self.spectral_shape))

    def coordinates(self) -> list[npt.NDArray[np.float64]]:
        """Grid coordinates per axis, broadcastable to the grid shape."""
        coords = []
        for axis, period in enumerate(self.periods):
            shape = [1] * self.real_dim
            shape[axis] = -1
            x = period * np.arange(self.grid_size) / self.grid_size
            coords.append(x.reshape(shape))
        return coords

    def forward(self, values: npt.ArrayLike) -> SpectralField:
        """Real FFT of a scalar field."""
        return np.asarray(
            fft.rfftn(values, axes=self.axes, workers=_fft_workers),
            dtype=np.complex128,
        )

    def inverse(self, coeffs: npt.ArrayLike) -> ScalarField:
        """Inverse real FFT back to the grid."""
        return np.asarray(
            fft.irfftn(coeffs, s=self.shape, axes=self.axes, workers=_fft_workers),
            dtype=np.float64,
        )

    def check_wavevector(self, k: Sequence[int]) -> Wavevector:
        """Validate a wavevector against this domain.

        Args:
            k: Integer components, one per real axis

        Returns:
            The wavevector as a tuple of ints

        Raises:
            DomainError: If the length is wrong, a component is not an
                integer, or the mode aliases (|k_a| >= N/2)
        """
        components = tuple(k)
        if len(components) != self.real_dim:
            raise DomainError(
                f"wavevector {components} needs {self.real_dim} components"
            )
        result = []
        for value in components:
            if isinstance(value, bool) or int(value) != value:
                raise DomainError(f"wavevector {components} must be integer")
            result.append(int(value))
        if any(2 * abs(value) >= self.grid_size for value in result):
            raise DomainError(
                f"wavevector {components} aliases on a grid of size {self.grid_size}"
            )
        return tuple(result)


def make_domain(
    n: int, grid_size: int, periods: Sequence[float] | None = None
) -> TorusDomain:
    """Build a torus domain.

    Args:
        n: Complex dimension (1 or 2)
        grid_size: Points per real axis, a power of two >= 8
        periods: Length of each of the 2n real axes (default all 1)

    Returns:
        The validated domain

    Raises:
        DomainError: On unsupported dimension, grid size or periods
    """
    if isinstance(n, bool) or n not in (1, 2):
        raise DomainError(f"complex dimension must be 1 or 2, got {n}")
    if (
        isinstance(grid_size, bool)
        or int(grid_size) != grid_size
        or grid_size < 8
        or int(grid_size) & (int(grid_size) - 1)
    ):
        raise DomainError(f"grid size must be a power of two >= 8, got {grid_size}")
    if periods is None:
        periods = [1.0] * (2 * n)
    if len(periods) != 2 * n:
        raise DomainError(f"expected {2 * n} periods, got {len(periods)}")
    if not all(math.isfinite(p) and p > 0 for p in periods):
        raise DomainError(f"periods must be positive, got {list(periods)}")
    return TorusDomain(
        n=n, grid_size=int(grid_size), periods=tuple(float(p) for p in periods)
    )


@dataclass(frozen=True, eq=False)
class PotentialField:
    """A real Kähler potential φ held in both grid and spectral form."""

    domain: TorusDomain
    values: ScalarField
    spectral_coeffs: SpectralField

    @classmethod
    def from_values(cls, domain: TorusDomain, values: npt.ArrayLike) -> "PotentialField":
        """Build a potential from grid values."""
        array = np.array(values, dtype=np.float64)
        if array.shape != domain.shape:
            raise DomainError(f"field shape {array.shape} != grid {domain.shape}")
        return cls(domain, _readonly(array), _readonly(domain.forward(array)))

    @classmethod
    def from_coeffs(cls, domain: TorusDomain, coeffs: npt.ArrayLike) -> "PotentialField":
        """Build a potential from real-FFT coefficients."""
        array = np.array(coeffs, dtype=np.complex128)
        if array.shape != domain.spectral_shape:
            raise DomainError(
                f"spectrum shape {array.shape} != {domain.spectral_shape}"
            )
        return cls(domain, _readonly(domain.inverse(array)), _readonly(array))

    @classmethod
    def zero(cls, domain: TorusDomain) -> "PotentialField":
        """The zero potential (flat metric)."""
        return cls.from_coeffs(domain, np.zeros(domain.spectral_shape))

    def mode_amplitude(self, k: Sequence[int]) -> float:
        """Cosine amplitude of the mode with wavevector k.

        For φ = a·cos(2π k·x/L) this returns a; for k = 0 it returns the mean.
        """
        wavevector = self.domain.check_wavevector(k)
        if wavevector[-1] < 0:
            wavevector = tuple(-value for value in wavevector)
        size = self.domain.grid_size
        index = tuple(value % size for value in wavevector)
        coeff = self.spectral_coeffs[index]
        if not any(wavevector):
            return float(coeff.real) / self.domain.num_points
        return 2.0 * float(coeff.real) / self.domain.num_points

    def sup_norm(self) -> float:
        """Maximum of |φ| over the grid."""
        return float(np.max(np.abs(self.values)))

    def spectral_tail(self) -> float:
        """Fraction of the non-constant energy in the top third of the spectrum."""
        return spectral_tail(self.domain, self.spectral_coeffs)

    def translate(self, shift: Sequence[int]) -> "PotentialField":
        """Translate by whole grid cells along each real axis."""
        if len(shift) != self.domain.real_dim:
            raise DomainError(f"shift {tuple(shift)} needs {self.domain.real_dim} entries")
        rolled = np.roll(self.values, tuple(shift), axis=self.domain.axes)
        return PotentialField.from_values(self.domain, rolled)

    def __add__(self, other: "float | PotentialField") -> "PotentialField":
        if isinstance(other, PotentialField):
            if other.domain != self.domain:
                raise DomainError("cannot add potentials on different domains")
            return PotentialField.from_coeffs(
                self.domain, self.spectral_coeffs + other.spectral_coeffs
            )
        # Constants only touch the k = 0 bin
        coeffs = np.array(self.spectral_coeffs)
        coeffs[(0,) * self.domain.real_dim] += float(other) * self.domain.num_points
        return PotentialField.from_coeffs(self.domain, coeffs)

    __radd__ = __add__


def spectral_tail(domain: TorusDomain, coeffs: SpectralField) -> float:
    """Energy fraction of modes with some |k_a| >= N/3, excluding k = 0.

    Args:
        domain: Domain of the spectrum
        coeffs: Real-FFT coefficients

    Returns:
        Tail fraction in [0, 1]; 0 for a constant field
    """
    energy = domain.spectral_weights * np.abs(coeffs) ** 2
    energy[(0,) * domain.real_dim] = 0.0
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    tail = np.zeros(domain.spectral_shape, dtype=bool)
    for k in domain.integer_frequencies:
        tail = tail | (3 * np.abs(k) >= domain.grid_size)
    return float(np.sum(energy[tail])) / total


def potential_from_modes(domain: TorusDomain, modes: Iterable[Mode]) -> PotentialField:
    """Build φ(x) = Σ a_k cos(2π k·x/L) from a list of (k, a) pairs.

    Args:
        domain: Target domain
        modes: Wavevector and amplitude pairs; duplicates superpose

    Returns:
        The potential field

    Raises:
        DomainError: If a wavevector is malformed or aliased
    """
    size = domain.grid_size
    indices = [
        np.arange(size, dtype=np.int64).reshape(
            [-1 if axis == a else 1 for axis in domain.axes]
        )
        for a in domain.axes
    ]
    values = np.zeros(domain.shape)
    for k, amplitude in modes:
        wavevector = domain.check_wavevector(k)
        if not any(wavevector):
            values += float(amplitude)
            continue
        # Integer phase keeps the samples exact modulo N
        phase = np.zeros((1,) * domain.real_dim, dtype=np.int64)
        for component, index in zip(wavevector, indices):
            if component:
                phase = phase + component * index
        values += float(amplitude) * np.cos(2.0 * np.pi * (phase % size) / size)
    return PotentialField.from_values(domain, values)


def _coefficients(
    field: "PotentialField | npt.ArrayLike", domain: TorusDomain | None
) -> tuple[TorusDomain, SpectralField]:
    if isinstance(field, PotentialField):
        if domain is not None and field.domain != domain:
            raise DomainError("field and domain disagree")
        return field.domain, field.spectral_coeffs
    if domain is None:
        raise DomainError("a domain is required for raw grid fields")
    array = np.asarray(field, dtype=np.float64)
    if array.shape != domain.shape:
        raise DomainError(f"field shape {array.shape} != grid {domain.shape}")
    return domain, domain.forward(array)


def _second_derivative_symbol(
    domain: TorusDomain, a: int, b: int
) -> npt.NDArray[np.float64]:
    if a == b:
        return -(domain.wavenumbers[a] ** 2)
    return -(domain.mixed_wavenumbers[a] * domain.mixed_wavenumbers[b])


def complex_hessian(
    field: "PotentialField | npt.ArrayLike", domain: TorusDomain | None = None
) -> MatrixField:
    """Compute ∂_i∂_{j̄}f spectrally.

    Each entry is assembled in Fourier space and inverted once.

    Args:
        field: A PotentialField, or grid values together with `domain`
        domain: Domain for raw grid values

    Returns:
        Hermitian n×n matrix per grid point, shape grid + (n, n)
    """
    domain, coeffs = _coefficients(field, domain)
    n = domain.n

    def entry(terms: list[tuple[float, int, int]]) -> ScalarField:
        symbol = sum(
            sign * _second_derivative_symbol(domain, a, b) for sign, a, b in terms
        )
        return domain.inverse(0.25 * symbol * coeffs)

    hessian = np.zeros(domain.shape + (n, n), dtype=np.complex128)
    for i in range(n):
        xi, yi = 2 * i, 2 * i + 1
        hessian[..., i, i] = entry([(1.0, xi, xi), (1.0, yi, yi)])
        for j in range(i + 1, n):
            xj, yj = 2 * j, 2 * j + 1
            real = entry([(1.0, xi, xj), (1.0, yi, yj)])
            imag = entry([(1.0, xi, yj), (-1.0, yi, xj)])
            hessian[..., i, j] = real + 1j * imag
            hessian[..., j, i] = real - 1j * imag
    return hessian


def _hermitian_det(g: MatrixField) -> ScalarField:
    n = g.shape[-1]
    if n == 1:
        return np.array(g[..., 0, 0].real)
    if n == 2:
        return np.array(
            (g[..., 0, 0] * g[..., 1, 1]).real - np.abs(g[..., 0, 1]) ** 2
        )
    return np.array(np.linalg.det(g).real)


def _hermitian_inverse(g: MatrixField) -> MatrixField:
    n = g.shape[-1]
    if n == 1:
        return 1.0 / g
    if n == 2:
        inverse = np.empty_like(g)
        det = _hermitian_det(g)
        inverse[..., 0, 0] = g[..., 1, 1] / det
        inverse[..., 1, 1] = g[..., 0, 0] / det
        inverse[..., 0, 1] = -g[..., 0, 1] / det
        inverse[..., 1, 0] = -g[..., 1, 0] / det
        return inverse
    return _hermitize(np.linalg.inv(g))


def hermitian_eigenvalues(a: MatrixField) -> npt.NDArray[np.float64]:
    """Ascending eigenvalues of a Hermitian matrix field, shape grid + (n,).

    Closed form for n <= 2 (mean ± hypot of the half difference and the
    off-diagonal entry), LAPACK otherwise.
    """
    n = a.shape[-1]
    if n == 1:
        return np.array(a[..., 0:1, 0].real)
    if n == 2:
        mean = 0.5 * (a[..., 0, 0].real + a[..., 1, 1].real)
        half = 0.5 * (a[..., 0, 0].real - a[..., 1, 1].real)
        off = 0.5 * (a[..., 0, 1] + np.conj(a[..., 1, 0]))
        radius = np.hypot(half, np.abs(off))
        return np.stack([mean - radius, mean + radius], axis=-1)
    return np.linalg.eigvalsh(_hermitize(a))


def _inverse_cholesky(g: MatrixField) -> MatrixField:
    """L⁻¹ for the lower Cholesky factor g = L·L^H."""
    n = g.shape[-1]
    if n == 1:
        return 1.0 / np.sqrt(g.real).astype(np.complex128)
    if n == 2:
        l11 = np.sqrt(g[..., 0, 0].real)
        l21 = g[..., 1, 0] / l11
        l22 = np.sqrt(g[..., 1, 1].real - np.abs(l21) ** 2)
        inverse = np.zeros_like(g)
        inverse[..., 0, 0] = 1.0 / l11
        inverse[..., 1, 1] = 1.0 / l22
        inverse[..., 1, 0] = -l21 / (l11 * l22)
        return inverse
    return np.linalg.inv(np.linalg.cholesky(g))


def _hermitize(a: MatrixField) -> MatrixField:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _identity(domain: TorusDomain) -> MatrixField:
    return np.broadcast_to(
        np.eye(domain.n, dtype=np.complex128), domain.shape + (domain.n, domain.n)
    )


@dataclass(frozen=True, eq=False)
class MetricField:
    """A Hermitian metric g_{ij̄} per grid point with cached inverse and det."""

    domain: TorusDomain
    g: MatrixField
    g_inv: MatrixField
    det_g: ScalarField
    min_eigenvalue: float
    is_flat: bool = False

    @classmethod
    def from_matrix(
        cls,
        domain: TorusDomain,
        g: npt.ArrayLike,
        positivity_floor: float = POSITIVITY_FLOOR,
    ) -> "MetricField":
        """Validate a matrix field and cache its inverse and determinant.

        Args:
            domain: Domain of the field
            g: Matrix per grid point, shape grid + (n, n)
            positivity_floor: Smallest admissible eigenvalue

        Returns:
            The metric field

        Raises:
            DomainError: On a shape mismatch
            NotKahlerError: If an eigenvalue falls below the floor or an
                entry is not finite
        """
        matrix = np.array(g, dtype=np.complex128)
        expected = domain.shape + (domain.n, domain.n)
        if matrix.shape != expected:
            raise DomainError(f"metric shape {matrix.shape} != {expected}")
        if not np.all(np.isfinite(matrix)):
            raise NotKahlerError("metric has non-finite entries")
        identity = _identity(domain)
        if np.array_equal(matrix, identity):
            return _flat_metric(domain)
        matrix = _hermitize(matrix)
        min_eig = float(np.min(hermitian_eigenvalues(matrix)[..., 0]))
        if not min_eig >= positivity_floor:
            raise NotKahlerError(
                f"metric left the Kähler cone: min eigenvalue {min_eig:.3e}",
                min_eigenvalue=min_eig,
            )
        return cls(
            domain,
            _readonly(matrix),
            _readonly(_hermitian_inverse(matrix)),
            _readonly(_hermitian_det(matrix)),
            min_eig,
            False,
        )

    @classmethod
    def flat(cls, domain: TorusDomain) -> "MetricField":
        """The background metric g = I."""
        return _flat_metric(domain)

    def scaled(self, factor: float) -> "MetricField":
        """The metric factor·g (not in the same class unless factor is 1)."""
        return MetricField.from_matrix(self.domain, factor * self.g)


@lru_cache(maxsize=8)
def _flat_metric(domain: TorusDomain) -> MetricField:
    # Read-only broadcast views, no grid-sized storage
    identity = _identity(domain)
    return MetricField(
        domain, identity, identity, np.broadcast_to(1.0, domain.shape), 1.0, True
    )


def metric_from_potential(domain: TorusDomain, phi: PotentialField) -> MetricField:
    """Build g = I + ∂∂̄φ.

    Raises:
        NotKahlerError: If g is not positive definite above the floor
    """
    if phi.domain != domain:
        raise DomainError("potential lives on a different domain")
    return MetricField.from_matrix(domain, _identity(domain) + complex_hessian(phi))


def relative_eigenvalues(
    a: MatrixField, reference: MetricField
) -> npt.NDArray[np.float64]:
    """Eigenvalues of a Hermitian field relative to a reference metric.

    Solves a·v = λ·g·v pointwise through a Cholesky factor of g.

    Returns:
        Ascending eigenvalues per point, shape grid + (n,)
    """
    if reference.is_flat:
        return hermitian_eigenvalues(a)
    chol_inv = _inverse_cholesky(reference.g)
    relative = chol_inv @ a @ np.conj(np.swapaxes(chol_inv, -1, -2))
    return hermitian_eigenvalues(relative)


@dataclass(frozen=True, eq=False)
class CurvatureBundle:
    """Ricci and scalar curvature of a metric with their extremes."""

    ricci: MatrixField
    scalar: ScalarField
    ricci_eig_min: float
    ricci_eig_max: float
    scalar_min: float
    scalar_max: float


def ricci(metric: MetricField) -> MatrixField:
    """R_{ij̄} = -∂_i∂_{j̄} log det g."""
    if metric.is_flat:
        return np.zeros(metric.g.shape, dtype=np.complex128)
    log_det = np.log(metric.det_g)
    if not np.all(np.isfinite(log_det)):
        raise NotKahlerError("log det g is not finite")
    return -complex_hessian(log_det, metric.domain)


def trace(metric: MetricField, a: MatrixField) -> ScalarField:
    """Contract a (1,1) tensor with g^{ij̄}: g^{ij̄}a_{ij̄}."""
    return np.einsum("...ij,...ji->...", metric.g_inv, a).real


def scalar_curvature(
    metric: MetricField,
    ricci_field: MatrixField,
    reference: MetricField | None = None,
) -> CurvatureBundle:
    """Scalar curvature R = g^{ij̄}R_{ij̄} and curvature extremes.

    Args:
        metric: The metric whose curvature is given
        ricci_field: Its Ricci tensor
        reference: Metric the Ricci eigenvalues are measured against
            (default: the flat background)

    Returns:
        The curvature bundle
    """
    scalar = trace(metric, ricci_field)
    if reference is None or reference.is_flat:
        eigenvalues = hermitian_eigenvalues(ricci_field)
    else:
        eigenvalues = relative_eigenvalues(ricci_field, reference)
    return CurvatureBundle(
        ricci=ricci_field,
        scalar=scalar,
        ricci_eig_min=float(np.min(eigenvalues)),
        ricci_eig_max=float(np.max(eigenvalues)),
        scalar_min=float(np.min(scalar)),
        scalar_max=float(np.max(scalar)),
    )


def curvature(metric: MetricField, reference: MetricField | None = None) -> CurvatureBundle:
    """Ricci and scalar curvature of a metric in one call."""
    return scalar_curvature(metric, ricci(metric), reference)


def laplacian(metric: MetricField, f: "PotentialField | npt.ArrayLike") -> ScalarField:
    """Δ_g f = g^{ij̄}∂_i∂_{j̄}f."""
    return trace(metric, complex_hessian(f, metric.domain))


def integrate(f: "float | npt.ArrayLike", metric: MetricField) -> float:
    """∫ f ωⁿ with the trapezoid rule (spectrally accurate on periodic data)."""
    domain = metric.domain
    values = np.broadcast_to(np.asarray(f, dtype=np.float64), domain.shape)
    return domain.background_volume * float(np.mean(values * metric.det_g))


def mean_normalize(
    phi: PotentialField, background: MetricField | None = None
) -> PotentialField:
    """Subtract the mean φ̲ = (1/V)∫φ ωⁿ taken against the background metric."""
    if background is None or background.is_flat:
        coeffs = np.array(phi.spectral_coeffs)
        coeffs[(0,) * phi.domain.real_dim] = 0.0
        return PotentialField.from_coeffs(phi.domain, coeffs)
    mean = integrate(phi.values, background) / integrate(1.0, background)
    return PotentialField.from_values(phi.domain, phi.values - mean)


def min_metric_ratio(omega_prime: MetricField, omega: MetricField) -> float:
    """Largest c with ω′ ≥ c·ω pointwise."""
    return float(np.min(relative_eigenvalues(omega_prime.g, omega)))


def max_metric_ratio(omega_prime: MetricField, omega: MetricField) -> float:
    """Smallest C with ω′ ≤ C·ω pointwise."""
    return float(np.max(relative_eigenvalues(omega_prime.g, omega)))


def check_resolution(domain: TorusDomain, coeffs: SpectralField, label: str) -> float:
    """Return the spectral tail of a field and warn when it is under-resolved."""
    tail = spectral_tail(domain, coeffs)
    if tail > TAIL_FRACTION_WARNING:
        logger.warning(
            f"{label} is under-resolved on N={domain.grid_size}: tail fraction {tail:.2e}"
        )
    return tail
