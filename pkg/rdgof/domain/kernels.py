"""
Domain layer - Smoothing kernels
Closed-form test channels for the three standard nulls (uniform on a finite
set under Hamming distortion, standard normal under squared error, uniform
on the circle under squared chord distance), a general discrete channel,
the exact distortion <-> parameter conversions, and the Bessel functions the
von Mises kernel needs.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import i0e, i1e

from rdgof.domain.distortion import DistortionSpec
from rdgof.domain.distributions import DiscreteDistribution, NORMALIZATION_TOL, TWO_PI
from rdgof.domain.errors import DistortionRangeError, InputError, NumericError, ParameterError

logger = logging.getLogger(__name__)

KAPPA_CAP = 1e6
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


# ===== Kernel variants =====

class SmoothingKernel(ABC):
    """Markov kernel used to smooth an empirical distribution before comparing it with the null"""

    kind: str = ""

    @abstractmethod
    def parameters(self) -> dict:
        """Parameters identifying the kernel"""

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.parameters()}


@dataclass(frozen=True)
class HammingMixture(SmoothingKernel):
    """x -> alpha * delta_x + (1 - alpha) * U on an alphabet of size l"""
    alpha: float
    l: int
    kind = "hamming"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.l < 1:
            raise ParameterError(f"Alphabet size must be positive, got {self.l}")

    def parameters(self) -> dict:
        return {"alpha": self.alpha, "l": self.l}

    @property
    def distortion(self) -> float:
        return hamming_distortion_of_alpha(self.alpha, self.l)

    def to_matrix(self) -> np.ndarray:
        """Row-stochastic l x l matrix of the kernel"""
        return self.alpha * np.eye(self.l) + (1.0 - self.alpha) / self.l


@dataclass(frozen=True)
class GaussianChannel(SmoothingKernel):
    """x -> law of alpha * x + sqrt(1 - alpha^2) * Z"""
    alpha: float
    kind = "gaussian"

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in [0, 1) for the Gaussian channel, got {self.alpha}")

    def parameters(self) -> dict:
        return {"alpha": self.alpha}

    @property
    def distortion(self) -> float:
        return gaussian_distortion_of_alpha(self.alpha)

    @property
    def noise_variance(self) -> float:
        return 1.0 - self.alpha ** 2


@dataclass(frozen=True)
class VonMisesSmoother(SmoothingKernel):
    """theta -> von Mises distribution centred at theta with concentration kappa"""
    kappa: float
    kind = "vonmises"

    def __post_init__(self):
        if not self.kappa >= 0.0:
            raise ParameterError(f"kappa must be nonnegative, got {self.kappa}")

    def parameters(self) -> dict:
        return {"kappa": self.kappa}

    @property
    def distortion(self) -> float:
        return vonmises_distortion_of_kappa(self.kappa)


@dataclass(frozen=True, eq=False)
class DiscreteChannel(SmoothingKernel):
    """General l x m row-stochastic channel matrix W[x, y] = W(y | x)"""
    matrix: np.ndarray
    kind = "discrete"

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or 0 in matrix.shape:
            raise InputError("Channel matrix must be a non-empty 2-d array")
        if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
            raise InputError("Channel entries must be finite and nonnegative")
        row_error = np.max(np.abs(matrix.sum(axis=1) - 1.0))
        if row_error > NORMALIZATION_TOL:
            raise InputError(f"Channel rows must sum to 1 (largest deviation {row_error:.3g})")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def parameters(self) -> dict:
        return {"matrix": self.matrix.tolist()}

    def expected_distortion(self, p: DiscreteDistribution, distortion: DistortionSpec) -> float:
        """sum_x sum_y p(x) W(y | x) d(x, y)"""
        l, m = self.matrix.shape
        if p.alphabet_size != l:
            raise InputError(f"Distribution has {p.alphabet_size} symbols, channel expects {l}")
        return float(p.probs @ (self.matrix * distortion.to_matrix(l, m)).sum(axis=1))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def apply(self, p: DiscreteDistribution) -> DiscreteDistribution:
        """Output distribution sum_x p(x) W(. | x)"""
        if p.alphabet_size != self.matrix.shape[0]:
            raise InputError(f"Distribution has {p.alphabet_size} symbols, channel expects {self.matrix.shape[0]}")
        return DiscreteDistribution(p.probs @ self.matrix)


# ===== Hamming (uniformity on a finite set) =====

def apply_hamming(kernel: HammingMixture, p: DiscreteDistribution) -> DiscreteDistribution:
    """
    Smooth p with the Hamming mixture kernel

    Computed as U + alpha * (p - U) so the uniform distribution is a fixed
    point bit for bit; alpha = 1 returns p itself.
    """
    if p.alphabet_size != kernel.l:
        raise InputError(f"Distribution has {p.alphabet_size} symbols, kernel expects {kernel.l}")
    if kernel.alpha == 1.0:
        return p
    u = 1.0 / kernel.l
    return DiscreteDistribution(u + kernel.alpha * (p.probs - u))


def hamming_distortion_of_alpha(alpha: float, l: int) -> float:
    """Expected Hamming distortion (1 - alpha)(l - 1)/l of the mixture kernel"""
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    return (1.0 - alpha) * (l - 1) / l


def alpha_from_distortion(d0: float, l: int) -> float:
    """
    Mixture weight of the Hamming kernel at distortion level d0

    Raises:
        DistortionRangeError: If d0 is outside [0, (l-1)/l]
    """
    if l < 2:
        raise ParameterError(f"Hamming distortion levels need an alphabet of at least 2 symbols, got {l}")
    high = (l - 1) / l
    if not 0.0 <= d0 <= high:
        raise DistortionRangeError(f"Hamming distortion level {d0} out of range", 0.0, high)
    return max(0.0, 1.0 - d0 * l / (l - 1))


# ===== Gaussian (normality) =====

def gaussian_smooth_point(x: float, alpha: float) -> Tuple[float, float]:
    """Mean and variance of the normal law the Gaussian kernel sends x to"""
    kernel = GaussianChannel(alpha)
    return alpha * x, kernel.noise_variance


def gaussian_distortion_of_alpha(alpha: float) -> float:
    """E[(Y - X)^2] = 2(1 - alpha) for X standard normal"""
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    return 2.0 * (1.0 - alpha)


def gaussian_alpha_from_distortion(d0: float) -> float:
    """Inverse of gaussian_distortion_of_alpha on (0, 2]"""
    if not 0.0 < d0 <= 2.0:
        raise DistortionRangeError(f"Gaussian distortion level {d0} out of range", 0.0, 2.0)
    return 1.0 - d0 / 2.0


def gaussian_additive_form(alpha: float) -> Tuple[float, float]:
    """
    Equivalent description of the Gaussian kernel for alpha > 0

    Returns:
        (noise_variance, reference_variance): adding N(0, 1/alpha^2 - 1) to
        the data and comparing with N(0, 1/alpha^2) gives the same divergence.
    """
    GaussianChannel(alpha)
    if alpha == 0.0:
        raise ParameterError("The additive form needs alpha > 0")
    inverse = 1.0 / alpha ** 2
    return inverse - 1.0, inverse


# ===== Bessel functions =====

def _check_kappa(kappa: float) -> None:
    if not kappa >= 0.0:
        raise ParameterError(f"kappa must be nonnegative, got {kappa}")


def log_bessel_i0(kappa: float) -> float:
    """ln I0(kappa), finite for every kappa >= 0"""
    _check_kappa(kappa)
    return float(np.log(i0e(kappa)) + kappa)


def bessel_i0(kappa: float) -> float:
    """
    Modified Bessel function of the first kind, order 0

    Raises:
        NumericError: If I0(kappa) is not representable as a double
    """
    log_value = log_bessel_i0(kappa)
    if log_value >= _LOG_FLOAT_MAX:
        raise NumericError(f"I0({kappa}) overflows double precision")
    return float(i0e(kappa) * math.exp(kappa))


def bessel_i1(kappa: float) -> float:
    """Modified Bessel function of the first kind, order 1"""
    _check_kappa(kappa)
    if kappa > 0 and math.log(i1e(kappa)) + kappa >= _LOG_FLOAT_MAX:
        raise NumericError(f"I1({kappa}) overflows double precision")
    return float(i1e(kappa) * math.exp(kappa))


def bessel_ratio(kappa: float) -> float:
    """I1(kappa) / I0(kappa), the mean resultant length of a von Mises law"""
    _check_kappa(kappa)
    return float(i1e(kappa) / i0e(kappa))


# ===== von Mises (uniformity of angles) =====

def vonmises_density(theta, center: float, kappa: float):
    """exp(kappa * cos(theta - center)) / (2 pi I0(kappa))"""
    _check_kappa(kappa)
    theta = np.asarray(theta, dtype=float)
    log_density = kappa * np.cos(theta - center) - math.log(TWO_PI) - log_bessel_i0(kappa)
    density = np.exp(log_density)
    return float(density) if density.ndim == 0 else density


def vonmises_distortion_of_kappa(kappa: float) -> float:
    """Expected squared chord distortion 2 - 2 I1/I0 of von Mises smoothing"""
    return 2.0 - 2.0 * bessel_ratio(kappa)


def vonmises_kappa_from_distortion(d0: float) -> float:
    """
    Concentration of the von Mises kernel at squared chord distortion d0

    Args:
        d0: Distortion level in (0, 2)

    Returns:
        float: kappa with 2 - 2 I1(kappa)/I0(kappa) = d0, capped at KAPPA_CAP

    Raises:
        DistortionRangeError: If d0 is outside (0, 2)
    """
    if not 0.0 < d0 < 2.0:
        raise DistortionRangeError(f"von Mises distortion level {d0} out of range", 0.0, 2.0)

    def residual(kappa: float) -> float:
        return vonmises_distortion_of_kappa(kappa) - d0

    if residual(KAPPA_CAP) >= 0.0:
        logger.warning("Distortion level %g needs kappa beyond %g; capping", d0, KAPPA_CAP)
        return KAPPA_CAP
    kappa = brentq(residual, 0.0, KAPPA_CAP, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=1000)
    logger.debug("kappa(%g) = %.17g, residual %.3g", d0, kappa, residual(kappa))
    return float(kappa)
