"""
Domain layer - Test statistics
The rate-distortion statistic D(Psi(Emp_n) || Psi(P0)) for the Hamming,
Gaussian and von Mises kernels, the classical statistics it interpolates
between (likelihood ratio, Pearson, Rayleigh, binned entropy, second moment),
and the mixture compensation identity used to analyse the continuous cases.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from rdgof.domain.distributions import (
    TWO_PI,
    DiscreteDistribution,
    EmpiricalSample,
    SampleKind,
    divergence_discrete,
    entropy,
    uniform,
)
from rdgof.domain.errors import InputError, NumericError, ParameterError
from rdgof.domain.kernels import (
    DiscreteChannel,
    GaussianChannel,
    HammingMixture,
    VonMisesSmoother,
    apply_hamming,
    gaussian_additive_form,
    log_bessel_i0,
)
from rdgof.domain.quadrature import (
    QuadratureConfig,
    circle_grid,
    grid_blocks,
    integrate_circle,
    integrate_line,
    line_grid,
)

logger = logging.getLogger(__name__)

COMPENSATION_TOL = 1e-8
_DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class CircularSummary:
    """Mean resultant vector (1/n) sum (cos t_i, sin t_i) and its squared length"""
    resultant: Tuple[float, float]
    resultant_norm_sq: float


@dataclass(frozen=True)
class NormalComponent:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ParameterError(f"Normal component needs a positive variance, got {self.variance}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class VonMisesComponent:
    """von Mises law on the circle; kappa = 0 is the uniform distribution"""
    center: float
    kappa: float

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ParameterError(f"kappa must be nonnegative, got {self.kappa}")


@dataclass(frozen=True)
class MixtureDecomposition:
    """
    Terms of D(mix || ref) = avg D(P_i || ref) - avg D(P_i || mix)
    residual is the numerical defect of that identity.
    """
    avg_component_to_reference: float
    avg_component_to_mixture: float
    mixture_to_reference: float
    residual: float


# ===== Helpers =====

def _merged(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct points and their relative multiplicities"""
    points, counts = np.unique(values, return_counts=True)
    return points, counts / values.size


def _normal_mixture_divergence(
    means: np.ndarray,
    weights: np.ndarray,
    variance: float,
    reference: NormalComponent,
    quad: QuadratureConfig,
) -> float:
    """D(sum_i w_i N(m_i, variance) || reference) by trapezoid quadrature"""
    sd = math.sqrt(variance)
    grid = line_grid(float(means.min()), float(means.max()), sd, quad)
    log_weights = np.log(weights)[:, None]
    integrand = np.empty_like(grid)
    for block in grid_blocks(grid.size, means.size):
        y = grid[block]
        log_mixture = logsumexp(log_weights + norm.logpdf(y[None, :], means[:, None], sd), axis=0)
        log_reference = norm.logpdf(y, reference.mean, reference.sd)
        integrand[block] = np.exp(log_mixture) * (log_mixture - log_reference)
    return max(integrate_line(integrand, grid), 0.0)


# ===== Rate-distortion statistics =====

def rd_statistic_hamming(
    emp: DiscreteDistribution, alpha: float, null: Optional[DiscreteDistribution] = None
) -> float:
    """
    D(alpha * Emp + (1 - alpha) * U || U)

    At alpha = 1 this is the likelihood ratio statistic, computed through the
    same code path.

    Args:
        emp: Empirical distribution
        alpha: Mixture weight in [0, 1]
        null: Null distribution, must be uniform (default)

    Returns:
        float: the statistic in nats
    """
    kernel = HammingMixture(alpha, emp.alphabet_size)
    reference = uniform(emp.alphabet_size)
    if null is not None and not np.allclose(null.probs, reference.probs, rtol=0, atol=1e-15):
        raise InputError("The Hamming kernel statistic needs a uniform null; use rd_statistic_discrete")
    return divergence_discrete(apply_hamming(kernel, emp), reference)


def rd_statistic_discrete(
    emp: DiscreteDistribution, channel: DiscreteChannel, null: DiscreteDistribution
) -> float:
    """D(Psi(Emp) || Psi(P0)) for an arbitrary discrete channel Psi"""
    return divergence_discrete(channel.apply(emp), channel.apply(null))


def rd_statistic_gaussian(
    sample: EmpiricalSample, alpha: float, quad: QuadratureConfig = _DEFAULT_QUADRATURE
) -> float:
    """
    D((1/n) sum_i N(alpha x_i, 1 - alpha^2) || N(0, 1))

    Raises:
        ParameterError: If alpha is outside [0, 1)
    """
    sample.require(SampleKind.REAL)
    kernel = GaussianChannel(alpha)
    if alpha == 0.0:
        return 0.0
    points, weights = _merged(sample.values)
    return _normal_mixture_divergence(
        alpha * points, weights, kernel.noise_variance, NormalComponent(0.0, 1.0), quad
    )


def rd_statistic_gaussian_additive(
    sample: EmpiricalSample, alpha: float, quad: QuadratureConfig = _DEFAULT_QUADRATURE
) -> float:
    """Same statistic, computed as D(X + N(0, 1/alpha^2 - 1) || N(0, 1/alpha^2))"""
    sample.require(SampleKind.REAL)
    noise_variance, reference_variance = gaussian_additive_form(alpha)
    points, weights = _merged(sample.values)
    return _normal_mixture_divergence(
        points, weights, noise_variance, NormalComponent(0.0, reference_variance), quad
    )


def rd_statistic_circular(
    sample: EmpiricalSample, kappa: float, quad: QuadratureConfig = _DEFAULT_QUADRATURE
) -> float:
    """
    D((1/n) sum_i vM(theta_i, kappa) || uniform on the circle)

    Integrated with the periodic trapezoid rule in the form
    (1/2pi) * integral of (r ln r - r + 1), r = 2 pi * density, whose
    integrand is nonnegative; this keeps the small-kappa regime accurate.
    """
    sample.require(SampleKind.CIRCULAR)
    VonMisesSmoother(kappa)
    if kappa == 0.0:
        return 0.0
    centers, weights = _merged(sample.values)
    grid = circle_grid(kappa, quad)
    log_weights = np.log(weights)[:, None]
    log_norm = log_bessel_i0(kappa)
    integrand = np.empty_like(grid)
    for block in grid_blocks(grid.size, centers.size):
        theta = grid[block]
        log_ratio = logsumexp(log_weights + kappa * np.cos(theta[None, :] - centers[:, None]), axis=0) - log_norm
        integrand[block] = np.exp(log_ratio) * log_ratio - np.expm1(log_ratio)
    return max(integrate_circle(integrand) / TWO_PI, 0.0)


# ===== Classical statistics =====

def lr_statistic(emp: DiscreteDistribution, p0: DiscreteDistribution) -> float:
    """Likelihood ratio (G / 2n) statistic D(Emp || P0); +inf on support violation"""
    return divergence_discrete(emp, p0)


def entropy_statistic(binned: DiscreteDistribution) -> float:
    """Entropy of a binned empirical distribution, in nats"""
    return entropy(binned)


def rayleigh_statistic(sample: EmpiricalSample) -> CircularSummary:
    """Mean resultant vector of the angles and its squared norm"""
    sample.require(SampleKind.CIRCULAR)
    c = float(np.mean(np.cos(sample.values)))
    s = float(np.mean(np.sin(sample.values)))
    return CircularSummary(resultant=(c, s), resultant_norm_sq=min(c * c + s * s, 1.0))


def second_moment(sample: EmpiricalSample) -> float:
    """(1/n) sum x_i^2"""
    sample.require(SampleKind.REAL)
    return float(np.mean(sample.values ** 2))


def sample_mean(sample: EmpiricalSample) -> float:
    """(1/n) sum x_i, the summary that drives the Gaussian statistic at small alpha"""
    sample.require(SampleKind.REAL)
    return float(np.mean(sample.values))


def closest_pair_cosine(sample: EmpiricalSample) -> float:
    """max cos(theta_i - theta_j) over pairs i != j"""
    sample.require(SampleKind.CIRCULAR)
    if sample.n < 2:
        raise InputError("Closest pair needs at least two angles")
    angles = np.sort(sample.values)
    gaps = np.append(np.diff(angles), TWO_PI - (angles[-1] - angles[0]))
    return float(np.cos(gaps.min()))


def quantile_bin(
    sample: EmpiricalSample, inverse_cdf: Callable[[float], float], k: int
) -> DiscreteDistribution:
    """
    Relative counts in the k equiprobable bins [F^-1((j-1)/k), F^-1(j/k))

    Args:
        sample: Real sample
        inverse_cdf: Quantile function of the null
        k: Number of bins, at least 2

    Returns:
        DiscreteDistribution: uniform in expectation under the null
    """
    sample.require(SampleKind.REAL)
    if k < 2:
        raise InputError(f"Quantile binning needs at least 2 bins, got {k}")
    edges = np.array([inverse_cdf(j / k) for j in range(1, k)], dtype=float)
    if np.any(np.diff(edges) < 0):
        raise InputError("inverse_cdf must be nondecreasing")
    # side="right": a point on an edge belongs to the bin that edge opens
    bins = np.searchsorted(edges, sample.values, side="right")
    return DiscreteDistribution(np.bincount(bins, minlength=k) / sample.n)


def bins_for_sample_size(n: int, gamma: float = 0.5) -> int:
    """k_n = ceil(n^gamma), at least 2"""
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"Bin exponent must lie in (0, 1), got {gamma}")
    return max(2, math.ceil(n ** gamma))


def binned_entropy_statistic(
    sample: EmpiricalSample, inverse_cdf: Callable[[float], float], k: int
) -> float:
    """Entropy of the equiprobable-bin histogram (small values reject)"""
    return entropy_statistic(quantile_bin(sample, inverse_cdf, k))


# ===== Compensation identity =====

Component = Union[DiscreteDistribution, NormalComponent, VonMisesComponent, Tuple[float, float]]


def _check_identity(avg_to_ref: float, avg_to_mix: float, mix_to_ref: float) -> MixtureDecomposition:
    if math.isinf(avg_to_ref) or math.isinf(mix_to_ref):
        residual = 0.0 if avg_to_ref == mix_to_ref else math.inf
    else:
        residual = mix_to_ref - (avg_to_ref - avg_to_mix)
    if abs(residual) > COMPENSATION_TOL * max(1.0, abs(avg_to_ref)):
        raise NumericError(f"Compensation identity violated by {residual:.3g}; refine the quadrature")
    return MixtureDecomposition(avg_to_ref, avg_to_mix, mix_to_ref, residual)


def _decompose_discrete(components: Sequence[DiscreteDistribution], weights: np.ndarray,
                        reference: DiscreteDistribution) -> MixtureDecomposition:
    table = np.array([c.probs for c in components])
    mixture = DiscreteDistribution(weights @ table)
    to_ref = np.array([divergence_discrete(c, reference) for c in components])
    to_mix = np.array([divergence_discrete(c, mixture) for c in components])
    return _check_identity(
        float(weights @ to_ref), float(weights @ to_mix), divergence_discrete(mixture, reference)
    )


def _decompose_on_grid(log_components: np.ndarray, weights: np.ndarray, log_reference: np.ndarray,
                       integrate: Callable[[np.ndarray], float]) -> MixtureDecomposition:
    log_mixture = logsumexp(np.log(weights)[:, None] + log_components, axis=0)
    densities = np.exp(log_components)
    to_ref = np.array([integrate(d * (lc - log_reference)) for d, lc in zip(densities, log_components)])
    to_mix = np.array([integrate(d * (lc - log_mixture)) for d, lc in zip(densities, log_components)])
    mix_to_ref = integrate(np.exp(log_mixture) * (log_mixture - log_reference))
    return _check_identity(float(weights @ to_ref), float(weights @ to_mix), mix_to_ref)


def mixture_divergence_decomposition(
    components: Sequence[Component],
    reference: Component,
    weights: Optional[Sequence[float]] = None,
    quad: QuadratureConfig = _DEFAULT_QUADRATURE,
) -> MixtureDecomposition:
    """
    Split D(mixture || reference) into its two compensating averages

    Components are DiscreteDistributions, NormalComponents (or (mean,
    variance) pairs) or VonMisesComponents; the reference belongs to the same
    family (VonMisesComponent(0, 0) is the uniform law on the circle).

    Raises:
        NumericError: If the identity fails by more than 1e-8 on the grid
    """
    if len(components) == 0:
        raise InputError("A mixture needs at least one component")
    w = np.full(len(components), 1.0 / len(components)) if weights is None else np.asarray(weights, dtype=float)
    if w.size != len(components) or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise InputError("Mixture weights must be positive, one per component, and sum to 1")

    first = components[0]
    if isinstance(first, DiscreteDistribution):
        return _decompose_discrete(components, w, reference)

    if isinstance(first, VonMisesComponent):
        kappas = np.array([c.kappa for c in components])
        centers = np.array([c.center for c in components])
        grid = circle_grid(float(max(kappas.max(), reference.kappa)), quad)
        log_norms = np.array([log_bessel_i0(k) for k in kappas])
        log_components = (kappas[:, None] * np.cos(grid[None, :] - centers[:, None])
                          - math.log(TWO_PI) - log_norms[:, None])
        log_reference = (reference.kappa * np.cos(grid - reference.center)
                         - math.log(TWO_PI) - log_bessel_i0(reference.kappa))
        return _decompose_on_grid(log_components, w, log_reference, integrate_circle)

    normals = [c if isinstance(c, NormalComponent) else NormalComponent(*c) for c in components]
    ref = reference if isinstance(reference, NormalComponent) else NormalComponent(*reference)
    means = np.array([c.mean for c in normals])
    sds = np.array([c.sd for c in normals])
    smallest = float(sds.min())
    grid = line_grid(float((means - sds * quad.truncation_sigmas).min()) + quad.truncation_sigmas * smallest,
                     float((means + sds * quad.truncation_sigmas).max()) - quad.truncation_sigmas * smallest,
                     smallest, quad)
    log_components = norm.logpdf(grid[None, :], means[:, None], sds[:, None])
    log_reference = norm.logpdf(grid, ref.mean, ref.sd)
    return _decompose_on_grid(log_components, w, log_reference, lambda v: integrate_line(v, grid))
