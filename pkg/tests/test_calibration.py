"""
Unit Tests for Monte Carlo calibration, power, consistency and Bahadur slopes
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import binom

from rdgof.adapters.sampling.numpy_samplers import (
    CategoricalSampler,
    NormalSampler,
    UniformCircleSampler,
    UniformDiscreteSampler,
)
from rdgof.application.ports.test_statistic import TestStatistic
from rdgof.application.services.calibration import (
    ALTERNATIVE_STREAM,
    BahadurSchedule,
    asymptotic_lr_calibration,
    bahadur_slope_exact,
    binary_hamming_statistics,
    calibrate,
    consistency_check,
    critical_value,
    derived_seed,
    gaussianity_diagnostics,
    p_value,
    power_estimate,
    replication_generator,
    simulate,
    simulate_null,
)
from rdgof.application.services.test_statistics import (
    CircularRDStatistic,
    GaussianRDStatistic,
    HammingRDStatistic,
    LikelihoodRatioStatistic,
    RayleighTestStatistic,
    hamming_family,
)
from rdgof.domain.distributions import DiscreteDistribution, EmpiricalSample, divergence_discrete, uniform
from rdgof.domain.errors import InputError, ParameterError, SimulationError
from rdgof.domain.reports import CalibrationResult
from rdgof.domain.statistics import rd_statistic_hamming

ALTERNATIVE = DiscreteDistribution([0.7, 0.3])


class FailingStatistic(TestStatistic):
    """Counts evaluations and fails on a chosen one"""

    def __init__(self, fail_on: int):
        self.calls = 0
        self.fail_on = fail_on

    def evaluate(self, sample: EmpiricalSample) -> float:
        self.calls += 1
        if self.calls == self.fail_on:
            raise FloatingPointError("overflow in statistic")
        return 0.0

    def describe(self) -> dict:
        return {"name": "failing"}


# ===== Seeding =====

class TestSeeding:
    """Test per-replication generators"""

    def test_same_index_same_stream(self):
        """Test (seed, index) fixes the generator"""
        a = replication_generator(42, 3).random(5)
        b = replication_generator(42, 3).random(5)

        assert np.array_equal(a, b)

    def test_different_indices_differ(self):
        """Test replications use distinct streams"""
        assert not np.array_equal(replication_generator(42, 0).random(5), replication_generator(42, 1).random(5))

    def test_seed_range(self):
        """Test seeds outside the unsigned 64-bit range raise ParameterError"""
        for seed in (-1, 2 ** 64):
            with pytest.raises(ParameterError, match="64-bit"):
                replication_generator(seed, 0)

    def test_derived_seed(self):
        """Test derived seeds are deterministic and distinct from the master"""
        assert derived_seed(7, 1) == derived_seed(7, 1)
        assert derived_seed(7, 1) != derived_seed(7, 2)
        assert 0 <= derived_seed(7, 1) < 2 ** 64


# ===== Null simulation =====

class TestSimulateNull:
    """Test Monte Carlo simulation of null statistics"""

    def test_deterministic(self):
        """Test identical seeds give identical values"""
        statistic = HammingRDStatistic(0.5, 4)
        a = simulate_null(UniformDiscreteSampler(4), statistic, 30, 50, seed=11)
        b = simulate_null(UniformDiscreteSampler(4), statistic, 30, 50, seed=11)

        assert np.array_equal(a, b)

    def test_independent_of_workers(self):
        """Test the thread pool returns the sequential result"""
        statistic = RayleighTestStatistic()
        sequential = simulate_null(UniformCircleSampler(), statistic, 25, 80, seed=5)
        threaded = simulate_null(UniformCircleSampler(), statistic, 25, 80, seed=5, workers=4)

        assert np.array_equal(sequential, threaded)

    def test_seed_changes_values(self):
        """Test different seeds give different values"""
        statistic = RayleighTestStatistic()

        assert not np.array_equal(
            simulate_null(UniformCircleSampler(), statistic, 25, 20, seed=1),
            simulate_null(UniformCircleSampler(), statistic, 25, 20, seed=2),
        )

    def test_failure_carries_index(self):
        """Test a failing statistic raises SimulationError with the replication index"""
        with pytest.raises(SimulationError, match="replication 3") as info:
            simulate_null(NormalSampler(), FailingStatistic(fail_on=4), 10, 10, seed=0)

        assert info.value.replication_index == 3
        assert isinstance(info.value.__cause__, FloatingPointError)

    def test_invalid_replications(self):
        """Test R < 1 raises InputError"""
        with pytest.raises(InputError, match="replications"):
            simulate(NormalSampler(), RayleighTestStatistic(), 10, 0, seed=0)

    @pytest.mark.slow
    def test_likelihood_ratio_chi_square_mean(self):
        """Test 2n D(Emp || U) has mean close to l - 1"""
        for l, expected, tolerance in ((5, 4.0, 0.3), (2, 1.0, 0.1)):
            n = 10_000
            values = simulate_null(UniformDiscreteSampler(l), LikelihoodRatioStatistic(uniform(l)), n, 2000,
                                   seed=3)

            assert abs(np.mean(2 * n * values) - expected) < tolerance


# ===== Critical values and p-values =====

class TestCriticalValue:
    """Test the conservative order statistic and p-value"""

    def test_order_statistic(self):
        """Test K = 95 for the values 1..100 at level 0.05"""
        values = np.arange(1, 101, dtype=float)

        assert critical_value(values, 0.05) == 95.0

    def test_p_value(self):
        """Test p = (1 + #{>= observed}) / (R + 1)"""
        values = np.arange(1, 101, dtype=float)

        assert p_value(95.0, values) == pytest.approx(7 / 101)
        assert p_value(1000.0, values) == pytest.approx(1 / 101)
        assert p_value(0.0, values) == 1.0

    def test_unsorted_input(self):
        """Test the samples need not be sorted"""
        values = np.random.default_rng(301).permutation(np.arange(1, 101, dtype=float))

        assert critical_value(values, 0.05) == 95.0

    def test_rank_clipped(self):
        """Test tiny R still gives a sample value"""
        assert critical_value([3.0], 0.5) == 3.0
        assert critical_value([1.0, 2.0], 0.99) == 1.0

    @pytest.mark.parametrize("replications", [19, 99, 100, 999])
    def test_p_value_at_critical_value(self, replications):
        """Test p(K) <= alpha + (2 - alpha)/(R + 1) for distinct values"""
        significance = 0.05
        values = np.random.default_rng(302).standard_normal(replications)

        p = p_value(critical_value(values, significance), values)

        assert p <= significance + (2 - significance) / (replications + 1) + 1e-12

    def test_p_value_bound_attained(self):
        """Test R = 100 at level 0.05 gives p(K) = 7/101"""
        values = np.arange(1, 101, dtype=float)

        assert p_value(critical_value(values, 0.05), values) == pytest.approx(
            0.05 + 1.95 / 101, rel=1e-12
        )

    def test_exchangeable_rejection_frequency(self):
        """Test a fresh null value is rejected with frequency at most alpha + 1/(R + 1)"""
        pool = np.random.default_rng(305).standard_normal(101)
        rejections = sum(pool[i] >= critical_value(np.delete(pool, i), 0.05) for i in range(pool.size))

        assert rejections / pool.size <= 0.05 + 1 / 101

    def test_empty_samples(self):
        """Test empty sample sets raise InputError"""
        with pytest.raises(InputError, match="empty"):
            critical_value([], 0.05)
        with pytest.raises(InputError, match="empty"):
            p_value(1.0, [])

    def test_significance_range(self):
        """Test significance outside (0, 1) raises InputError"""
        with pytest.raises(InputError, match="significance"):
            critical_value([1.0], 1.0)


class TestCalibrate:
    """Test the calibration record"""

    def test_calibration_result(self):
        """Test K_n is the order statistic of the recorded samples"""
        result = calibrate(UniformDiscreteSampler(3), HammingRDStatistic(0.8, 3), 40, 200, seed=9,
                           significance=0.1)

        assert result.replications == 200
        assert len(result.null_samples) == 200
        assert result.critical_value == critical_value(result.null_samples, 0.1)
        assert result.statistic["name"] == "rd"
        assert result.null == {"model": "uniform", "l": 3}

    def test_inconsistent_record_rejected(self):
        """Test a record whose K_n is not the order statistic fails validation"""
        with pytest.raises(ValidationError, match="order statistic"):
            CalibrationResult(null_samples=[1.0, 2.0, 3.0, 4.0], critical_value=1.0, significance=0.25,
                              replications=4, seed=0, n=10)

    def test_asymptotic_lr(self):
        """Test the chi-square critical value with l - 1 degrees of freedom"""
        n = 500
        k_n, p = asymptotic_lr_calibration(7.814727903251178 / (2 * n), n, 4, 0.05)

        assert k_n == pytest.approx(7.814727903251178 / (2 * n), rel=1e-12)
        assert p == pytest.approx(0.05, rel=1e-9)

    def test_asymptotic_needs_two_symbols(self):
        """Test l = 1 raises InputError"""
        with pytest.raises(InputError):
            asymptotic_lr_calibration(0.0, 10, 1, 0.05)


# ===== Power =====

class TestPowerEstimate:
    """Test rejection frequencies under alternatives"""

    def test_null_alternative_gives_size(self):
        """Test power against the null itself is close to the level"""
        statistic = RayleighTestStatistic()
        k_n = calibrate(UniformCircleSampler(), statistic, 20, 20_000, seed=1, significance=0.05).critical_value
        estimate = power_estimate(statistic, k_n, UniformCircleSampler(), 20, 2000, seed=derived_seed(1, 99))

        assert abs(estimate.power - 0.05) < 0.02
        assert estimate.stderr == pytest.approx(math.sqrt(estimate.power * (1 - estimate.power) / 2000))

    def test_point_mass_alternative(self):
        """Test a point mass is always rejected"""
        statistic = HammingRDStatistic(1.0, 4)
        k_n = calibrate(UniformDiscreteSampler(4), statistic, 50, 200, seed=2, significance=0.05).critical_value
        estimate = power_estimate(statistic, k_n, CategoricalSampler(DiscreteDistribution([1.0, 0.0, 0.0, 0.0])),
                                  50, 100, seed=3)

        assert estimate.power == 1.0
        assert estimate.stderr == 0.0
        assert estimate.alternative == {"model": "categorical", "probs": [1.0, 0.0, 0.0, 0.0]}


# ===== Consistency =====

class TestConsistencyCheck:
    """Test the sample-size grid study"""

    def test_report_shape(self):
        """Test one row per n and the alternative only at the largest n"""
        report = consistency_check(UniformDiscreteSampler(2), lambda n: HammingRDStatistic(0.9, 2), [20, 40],
                                   replications=50, seed=4, alternative=CategoricalSampler(ALTERNATIVE),
                                   target_divergence=divergence_discrete(ALTERNATIVE, uniform(2)))

        assert [row.n for row in report.rows] == [20, 40]
        assert report.rows[0].alternative_q05 is None
        assert report.rows[1].alternative_q05 is not None
        assert report.epsilon == 0.02
        assert report.alternative_bound_met is not None

    def test_without_alternative(self):
        """Test the alternative fields stay empty"""
        report = consistency_check(UniformDiscreteSampler(3), hamming_family(3), [10, 20], replications=30,
                                   seed=4)

        assert report.epsilon is None
        assert report.alternative_bound_met is None

    def test_alternative_uses_its_own_stream(self):
        """Test the alternative replications are drawn from the derived alternative seed"""
        statistic = HammingRDStatistic(0.9, 2)
        report = consistency_check(UniformDiscreteSampler(2), lambda n: statistic, [30], replications=40,
                                   seed=6, alternative=UniformDiscreteSampler(2))
        expected = simulate(UniformDiscreteSampler(2), statistic, 30, 40, derived_seed(6, ALTERNATIVE_STREAM))
        null_values = simulate(UniformDiscreteSampler(2), statistic, 30, 40, 6)

        assert report.rows[0].alternative_q05 == float(np.quantile(expected, 0.05))
        assert report.rows[0].median_null == float(np.median(null_values))

    def test_grid_must_increase(self):
        """Test a non-increasing grid raises InputError"""
        with pytest.raises(InputError, match="increasing"):
            consistency_check(UniformDiscreteSampler(2), hamming_family(2), [100, 100], replications=10, seed=0)

    @pytest.mark.slow
    def test_null_medians_vanish(self):
        """Test the null median decreases toward 0 along the grid"""
        report = consistency_check(UniformDiscreteSampler(4), hamming_family(4), [100, 1000, 10_000],
                                   replications=500, seed=5)

        assert report.null_monotone
        assert report.rows[-1].median_null < 0.05

    @pytest.mark.slow
    def test_alternative_lower_bound(self):
        """Test the 5th percentile under (0.7, 0.3) stays above D(P || U) - epsilon"""
        target = divergence_discrete(ALTERNATIVE, uniform(2))
        report = consistency_check(UniformDiscreteSampler(2), lambda n: HammingRDStatistic(0.99, 2),
                                   [100, 1000, 10_000], replications=500, seed=6,
                                   alternative=CategoricalSampler(ALTERNATIVE), target_divergence=target)

        assert report.alternative_bound_met
        assert report.rows[-1].alternative_q05 >= target - 0.02


# ===== Bahadur slopes =====

class TestBahadurSlope:
    """Test exact tail enumeration on binary data"""

    def test_vectorised_statistics(self):
        """Test the enumeration matches the scalar statistic"""
        n = 12
        values = binary_hamming_statistics(n, 0.7)
        for k in range(n + 1):
            emp = DiscreteDistribution([k / n, 1 - k / n])

            assert values[k] == pytest.approx(rd_statistic_hamming(emp, 0.7), rel=1e-12, abs=1e-15)

    def test_slope_near_divergence(self):
        """Test the slope at n = 2000 is close to D(P || U)"""
        target = divergence_discrete(ALTERNATIVE, uniform(2))
        row = bahadur_slope_exact(ALTERNATIVE, [2000])[0]

        assert target == pytest.approx(0.08228, abs=1e-5)
        assert row.slope == pytest.approx(target, rel=0.15)

    def test_zero_threshold(self):
        """Test K_n = 0 gives tail probability 1 and slope 0"""
        row = bahadur_slope_exact(ALTERNATIVE, [100], threshold=lambda n: 0.0)[0]

        assert row.slope == pytest.approx(0.0, abs=1e-12)

    def test_null_alternative(self):
        """Test P = U gives slope 0"""
        row = bahadur_slope_exact(uniform(2), [100])[0]

        assert row.slope == pytest.approx(0.0, abs=1e-12)

    def test_unreachable_threshold(self):
        """Test K_n above ln 2 gives slope +inf"""
        row = bahadur_slope_exact(ALTERNATIVE, [50], threshold=lambda n: 1.0)[0]

        assert row.unreachable
        assert row.slope == math.inf

    def test_point_mass_tail(self):
        """Test the all-equal outcomes have probability 2 * 2^-n"""
        n = 30
        row = bahadur_slope_exact(DiscreteDistribution([1.0, 0.0]), [n])[0]

        assert row.log_tail_probability == pytest.approx(math.log(2.0) - n * math.log(2.0), rel=1e-12)

    def test_alpha_sequence(self):
        """Test alpha may depend on n"""
        rows = bahadur_slope_exact(ALTERNATIVE, [100, 200], alpha=lambda n: 1.0 - 1.0 / n)

        assert all(row.slope > 0.0 for row in rows)

    def test_sample_size_limit(self):
        """Test n above 2000 raises InputError"""
        with pytest.raises(InputError, match="2000"):
            bahadur_slope_exact(ALTERNATIVE, [2001])

    def test_binary_only(self):
        """Test l = 3 raises InputError"""
        with pytest.raises(InputError, match="binary"):
            bahadur_slope_exact(uniform(3), [10])

    @pytest.mark.slow
    def test_monte_carlo_agreement(self):
        """Test the exact tail against simulation at n = 50"""
        n, replications = 50, 100_000
        row = bahadur_slope_exact(ALTERNATIVE, [n])[0]
        values = simulate_null(UniformDiscreteSampler(2), HammingRDStatistic(1.0, 2), n, replications, seed=8)

        estimate = np.count_nonzero(values >= row.threshold * (1 - 1e-12)) / replications
        exact = math.exp(row.log_tail_probability)

        assert exact == pytest.approx(2 * binom.sf(34, n, 0.5), rel=1e-9)
        assert abs(estimate - exact) < 4 * math.sqrt(exact / replications)


class TestBahadurSchedule:
    """Test the growth schedules"""

    def test_defaults(self):
        """Test k_n = ceil(sqrt(n)) and kappa_n = n"""
        schedule = BahadurSchedule()

        assert schedule.bins_for(100) == 10
        assert schedule.bins_for(1) == 2
        assert schedule.kappa_for(100) == 100.0

    def test_concentration_below_cap(self):
        """Test eta_prime must stay below eta"""
        with pytest.raises(ValidationError, match="eta_prime"):
            BahadurSchedule(eta=1.5, eta_prime=1.5)

    def test_gamma_range(self):
        """Test gamma outside (0, 1) is rejected"""
        with pytest.raises(ValidationError):
            BahadurSchedule(gamma=1.0)


# ===== Diagnostics =====

class TestGaussianityDiagnostics:
    """Test the normal-approximation summaries"""

    def test_normal_values(self):
        """Test normal values have small skewness and Q-Q correlation near 1"""
        values = np.random.default_rng(303).standard_normal(100_000)
        report = gaussianity_diagnostics(values)

        assert abs(report.skewness) < 0.05
        assert abs(report.excess_kurtosis) < 0.1
        assert report.qq_correlation > 0.999
        assert not report.degenerate

    def test_skewed_values(self):
        """Test exponential values have skewness near 2"""
        values = np.random.default_rng(304).exponential(size=100_000)

        assert gaussianity_diagnostics(values).skewness == pytest.approx(2.0, abs=0.3)

    def test_constant_values(self):
        """Test constant values are flagged degenerate"""
        report = gaussianity_diagnostics(np.zeros(200))

        assert report.degenerate
        assert math.isnan(report.skewness)

    def test_too_few_values(self):
        """Test fewer than 100 values raise InputError"""
        with pytest.raises(InputError, match="at least 100"):
            gaussianity_diagnostics(np.ones(99))

    @pytest.mark.slow
    @pytest.mark.parametrize("sampler, statistic", [
        (UniformDiscreteSampler(4), HammingRDStatistic(0.5, 4)),
        (NormalSampler(), GaussianRDStatistic(0.5)),
        (UniformCircleSampler(), CircularRDStatistic(1.0)),
    ], ids=["hamming", "gaussian", "circular"])
    def test_null_report_at_scale(self, sampler, statistic):
        """Test diagnostics at n = 500, R = 5000 are finite for each smoothed statistic"""
        values = simulate_null(sampler, statistic, 500, 5000, seed=10, workers=4)
        report = gaussianity_diagnostics(values)

        assert report.replications == 5000
        assert not report.degenerate
        assert math.isfinite(report.skewness)
        assert math.isfinite(report.excess_kurtosis)
        assert 0.0 < report.qq_correlation <= 1.0
