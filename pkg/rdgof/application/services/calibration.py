"""
Application Service - Monte Carlo calibration
Null simulation, critical values and p-values, power estimation, empirical
consistency checks along a sample-size grid, exact Bahadur slopes for binary
data, and Gaussianity diagnostics of simulated statistics.

Replication i always draws from the generator derived from (seed, i), so
results do not depend on execution order or on the number of workers.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import isotonic_regression
from scipy.special import logsumexp, rel_entr
from scipy.stats import binom, chi2, kurtosis, probplot, skew

from rdgof.application.ports.sampler import Sampler
from rdgof.application.ports.test_statistic import TestStatistic
from rdgof.domain.distributions import DiscreteDistribution
from rdgof.domain.errors import InputError, ParameterError, SimulationError
from rdgof.domain.kernels import HammingMixture
from rdgof.domain.reports import (
    MAX_SEED,
    BahadurSlopeRow,
    CalibrationResult,
    ConsistencyReport,
    ConsistencyRow,
    GaussianityDiagnostics,
    PowerEstimate,
    order_statistic_rank,
)
from rdgof.domain.statistics import rd_statistic_hamming

logger = logging.getLogger(__name__)

MAX_EXACT_N = 2000
MIN_DIAGNOSTIC_REPLICATIONS = 100
_BOOTSTRAP_RESAMPLES = 200
# stream ids above any replication index
BOOTSTRAP_STREAM = 2 ** 32
ALTERNATIVE_STREAM = 2 ** 32 + 1


class NullModel(Enum):
    """The three null hypotheses with closed-form test channels"""
    UNIFORM_DISCRETE = "uniform"
    STANDARD_NORMAL = "normal"
    UNIFORM_CIRCLE = "circular"


class BahadurSchedule(BaseModel):
    """
    Growth schedule for the number of bins and the von Mises concentration
    k_n = ceil(n^gamma), kappa_n = n^eta_prime with eta_prime < eta, so that
    kappa_n / n^eta -> 0.
    """
    model_config = ConfigDict(frozen=True)

    gamma: float = Field(0.5, gt=0, lt=1, description="Bin exponent")
    eta: float = Field(2.0, ge=1, lt=3, description="Growth cap exponent")
    eta_prime: float = Field(1.0, ge=0, description="Concentration exponent")

    @model_validator(mode="after")
    def concentration_below_cap(self) -> "BahadurSchedule":
        """Validate eta_prime < eta"""
        if not self.eta_prime < self.eta:
            raise ValueError(f"eta_prime ({self.eta_prime}) must be below eta ({self.eta})")
        return self

    def bins_for(self, n: int) -> int:
        return max(2, math.ceil(n ** self.gamma))

    def kappa_for(self, n: int) -> float:
        return float(n ** self.eta_prime)


def replication_generator(seed: int, index: int) -> np.random.Generator:
    """Generator of replication `index` under master `seed`"""
    if not 0 <= seed <= MAX_SEED:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def derived_seed(seed: int, stream: int) -> int:
    """Independent master seed for a secondary simulation under the same seed"""
    state = np.random.SeedSequence(seed, spawn_key=(stream,)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def simulate(sampler: Sampler, statistic: TestStatistic, n: int, replications: int, seed: int,
             workers: int = 1) -> np.ndarray:
    """
    Statistic values on `replications` fresh iid samples of size n

    Raises:
        SimulationError: If the statistic fails; carries the replication index
    """
    if replications < 1:
        raise InputError(f"replications must be at least 1, got {replications}")
    if n < 1:
        raise InputError(f"sample size must be at least 1, got {n}")

    def one(index: int) -> float:
        sample = sampler.draw(n, replication_generator(seed, index))
        try:
            return statistic.evaluate(sample)
        except Exception as e:
            raise SimulationError(index, e) from e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, range(replications)))
    else:
        values = [one(i) for i in range(replications)]
    return np.array(values, dtype=float)


def simulate_null(model: Sampler, statistic: TestStatistic, n: int, replications: int, seed: int,
                  workers: int = 1) -> np.ndarray:
    """Null distribution of the statistic by Monte Carlo; deterministic given seed"""
    return simulate(model, statistic, n, replications, seed, workers)


def critical_value(null_samples: Sequence[float], significance: float) -> float:
    """
    Conservative critical value: the ceil((1 - significance) R)-th order statistic

    Raises:
        InputError: If the sample set is empty or significance is outside (0, 1)
    """
    if not 0.0 < significance < 1.0:
        raise InputError(f"significance must lie in (0, 1), got {significance}")
    values = np.sort(np.asarray(null_samples, dtype=float))
    if values.size == 0:
        raise InputError("Cannot take a critical value of an empty sample set")
    return float(values[order_statistic_rank(values.size, significance) - 1])


def p_value(observed: float, null_samples: Sequence[float]) -> float:
    """(1 + #{samples >= observed}) / (R + 1)"""
    values = np.asarray(null_samples, dtype=float)
    if values.size == 0:
        raise InputError("Cannot compute a p-value against an empty sample set")
    return float((1 + np.count_nonzero(values >= observed)) / (values.size + 1))


def calibrate(sampler: Sampler, statistic: TestStatistic, n: int, replications: int, seed: int,
              significance: float, workers: int = 1) -> CalibrationResult:
    """Simulate the null and record the critical value K_n"""
    samples = simulate_null(sampler, statistic, n, replications, seed, workers)
    k_n = critical_value(samples, significance)
    logger.info("calibrated n=%d R=%d seed=%d: K_n=%.17g", n, replications, seed, k_n)
    return CalibrationResult(
        null_samples=samples.tolist(),
        critical_value=k_n,
        significance=significance,
        replications=replications,
        seed=seed,
        n=n,
        statistic=statistic.describe(),
        null=sampler.describe(),
    )


def asymptotic_lr_calibration(statistic: float, n: int, l: int, significance: float) -> Tuple[float, float]:
    """
    Critical value and p-value of D(Emp || P0) from 2nD ~ chi^2 with l - 1 degrees of freedom

    Returns:
        (critical_value, p_value)
    """
    if l < 2:
        raise InputError(f"The chi-square approximation needs at least 2 symbols, got {l}")
    if not 0.0 < significance < 1.0:
        raise InputError(f"significance must lie in (0, 1), got {significance}")
    dof = l - 1
    return float(chi2.ppf(1.0 - significance, dof) / (2.0 * n)), float(chi2.sf(2.0 * n * statistic, dof))


def power_estimate(statistic: TestStatistic, critical: float, alternative: Sampler, n: int,
                   replications: int, seed: int, workers: int = 1) -> PowerEstimate:
    """Fraction of alternative replications with statistic >= K_n"""
    values = simulate(alternative, statistic, n, replications, seed, workers)
    power = float(np.count_nonzero(values >= critical) / replications)
    stderr = math.sqrt(power * (1.0 - power) / replications)
    logger.info("power n=%d R=%d against %s: %.4f +- %.4f", n, replications, alternative.describe(), power, stderr)
    return PowerEstimate(
        power=power,
        stderr=stderr,
        replications=replications,
        critical_value=critical,
        n=n,
        seed=seed,
        alternative=alternative.describe(),
    )


def _median_stderr(values: np.ndarray, rng: np.random.Generator) -> float:
    """Bootstrap standard error of the median"""
    resamples = rng.choice(values, size=(_BOOTSTRAP_RESAMPLES, values.size), replace=True)
    return float(np.std(np.median(resamples, axis=1), ddof=1))


def consistency_check(null: Sampler, statistic_for: Callable[[int], TestStatistic], n_grid: Sequence[int],
                      replications: int, seed: int, alternative: Optional[Sampler] = None,
                      target_divergence: Optional[float] = None, epsilon: float = 0.02,
                      workers: int = 1) -> ConsistencyReport:
    """
    Empirical Hodges-Lehmann consistency along a sample-size grid

    Under the null the median statistic should decrease toward 0: the medians
    are fitted by a nonincreasing isotonic regression and accepted when the
    largest residual is below twice the bootstrap noise of the medians. Under
    a fixed alternative, the 5th percentile at the largest n should exceed
    target_divergence - epsilon.

    Args:
        null: Null sampler
        statistic_for: n -> statistic with the distortion level for that n
        n_grid: Increasing sample sizes
        replications: Replications per grid point
        seed: Master seed
        alternative: Optional alternative sampler
        target_divergence: D(P || P0) of the alternative
        epsilon: Allowed shortfall of the 5th percentile

    Returns:
        ConsistencyReport
    """
    grid = [int(n) for n in n_grid]
    if len(grid) == 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("n_grid must be a non-empty increasing sequence")

    bootstrap_rng = replication_generator(seed, BOOTSTRAP_STREAM)
    medians, stderrs = [], []
    for n in grid:
        values = simulate_null(null, statistic_for(n), n, replications, seed, workers)
        medians.append(float(np.median(values)))
        stderrs.append(_median_stderr(values, bootstrap_rng))
        logger.info("consistency n=%d: median null statistic %.6g", n, medians[-1])

    fitted = isotonic_regression(np.array(medians), increasing=False).x
    residual = float(np.max(np.abs(np.array(medians) - fitted)))
    noise = float(max(stderrs))

    q05 = None
    bound_met = None
    if alternative is not None:
        largest = grid[-1]
        values = simulate(alternative, statistic_for(largest), largest, replications,
                          derived_seed(seed, ALTERNATIVE_STREAM), workers)
        q05 = float(np.quantile(values, 0.05))
        if target_divergence is not None:
            bound_met = q05 >= target_divergence - epsilon

    rows = [
        ConsistencyRow(n=n, median_null=m, isotonic_median=float(f), median_stderr=s,
                       alternative_q05=q05 if n == grid[-1] else None)
        for n, m, f, s in zip(grid, medians, fitted, stderrs)
    ]
    return ConsistencyReport(
        rows=rows,
        isotonic_residual=residual,
        noise_estimate=noise,
        null_monotone=residual <= 2.0 * noise,
        target_divergence=target_divergence,
        epsilon=epsilon if alternative is not None else None,
        alternative_bound_met=bound_met,
    )


def binary_hamming_statistics(n: int, alpha: float) -> np.ndarray:
    """
    Hamming statistic for every binary empirical distribution (k/n, 1 - k/n), k = 0..n

    Vectorised form of rd_statistic_hamming on l = 2.
    """
    HammingMixture(alpha, 2)  # validates alpha
    first = np.arange(n + 1) / n
    second = (n - np.arange(n + 1)) / n
    if alpha != 1.0:
        first = 0.5 + alpha * (first - 0.5)
        second = 0.5 + alpha * (second - 0.5)
    return rel_entr(first, 0.5) + rel_entr(second, 0.5)


def bahadur_slope_exact(alternative: DiscreteDistribution, n_grid: Sequence[int],
                        threshold: Optional[Callable[[int], float]] = None,
                        alpha: Union[float, Callable[[int], float]] = 1.0) -> List[BahadurSlopeRow]:
    """
    Exact -(1/n) ln Pr_U(statistic >= K_n) on a binary alphabet

    The tail probability sums Binomial(n, 1/2) masses over every outcome
    whose statistic reaches K_n, in log space.

    Args:
        alternative: Binary alternative P
        n_grid: Sample sizes, each at most 2000
        threshold: n -> K_n; defaults to the statistic evaluated at P itself,
            i.e. D(alpha P + (1 - alpha) U || U)
        alpha: Mixture weight, constant or a function of n

    Returns:
        List[BahadurSlopeRow]: one row per n; unreachable thresholds give slope +inf
    """
    if alternative.alphabet_size != 2:
        raise InputError("Exact Bahadur slopes are available for binary alphabets only")
    rows = []
    for n in n_grid:
        if not 1 <= n <= MAX_EXACT_N:
            raise InputError(f"Exact enumeration supports 1 <= n <= {MAX_EXACT_N}, got {n}")
        a = alpha(n) if callable(alpha) else alpha
        k_n = threshold(n) if threshold is not None else rd_statistic_hamming(alternative, a)
        statistics = binary_hamming_statistics(n, a)
        # outcomes tying K_n up to rounding count as reaching it
        reached = statistics >= k_n - 1e-12 * max(1.0, abs(k_n))
        if not np.any(reached):
            rows.append(BahadurSlopeRow(n=n, threshold=k_n, log_tail_probability=-math.inf,
                                        slope=math.inf, unreachable=True))
            continue
        log_tail = float(min(logsumexp(binom.logpmf(np.flatnonzero(reached), n, 0.5)), 0.0))
        rows.append(BahadurSlopeRow(n=n, threshold=k_n, log_tail_probability=log_tail,
                                    slope=0.0 - log_tail / n))
    return rows


def gaussianity_diagnostics(null_samples: Sequence[float]) -> GaussianityDiagnostics:
    """
    Skewness, excess kurtosis and normal Q-Q correlation of simulated statistics

    Report-only; constant samples are flagged degenerate.
    """
    values = np.asarray(null_samples, dtype=float)
    if values.size < MIN_DIAGNOSTIC_REPLICATIONS:
        raise InputError(f"Diagnostics need at least {MIN_DIAGNOSTIC_REPLICATIONS} values, got {values.size}")
    if not np.all(np.isfinite(values)) or np.ptp(values) == 0.0:
        return GaussianityDiagnostics(skewness=math.nan, excess_kurtosis=math.nan, qq_correlation=math.nan,
                                      replications=int(values.size), degenerate=True)
    (_, _), (_, _, r) = probplot(values, dist="norm")
    return GaussianityDiagnostics(
        skewness=float(skew(values)),
        excess_kurtosis=float(kurtosis(values, fisher=True)),
        qq_correlation=float(r),
        replications=int(values.size),
    )
