"""
Unit Tests for the smoothing kernels, conversions and Bessel functions
"""
import logging
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.stats import norm

from rdgof.domain.distortion import (
    HammingDistortion,
    MatrixDistortion,
    RDPoint,
    SquaredChordCircle,
    SquaredEuclideanReal,
)
from rdgof.domain.distributions import DiscreteDistribution, uniform
from rdgof.domain.errors import DistortionRangeError, InputError, NumericError, ParameterError
from rdgof.domain.kernels import (
    KAPPA_CAP,
    DiscreteChannel,
    GaussianChannel,
    HammingMixture,
    VonMisesSmoother,
    alpha_from_distortion,
    apply_hamming,
    bessel_i0,
    bessel_i1,
    bessel_ratio,
    gaussian_additive_form,
    gaussian_alpha_from_distortion,
    gaussian_distortion_of_alpha,
    gaussian_smooth_point,
    hamming_distortion_of_alpha,
    log_bessel_i0,
    vonmises_density,
    vonmises_distortion_of_kappa,
    vonmises_kappa_from_distortion,
)


# ===== Kernel variants =====

class TestKernelVariants:
    """Test kernel parameter validation"""

    def test_hamming_alpha_range(self):
        """Test alpha outside [0, 1] raises ParameterError"""
        with pytest.raises(ParameterError, match="alpha must lie in"):
            HammingMixture(1.5, 3)

    def test_gaussian_rejects_alpha_one(self):
        """Test alpha = 1 is reserved for the likelihood-ratio case"""
        with pytest.raises(ParameterError, match=r"\[0, 1\)"):
            GaussianChannel(1.0)

    def test_vonmises_negative_kappa(self):
        """Test negative kappa raises ParameterError"""
        with pytest.raises(ParameterError, match="nonnegative"):
            VonMisesSmoother(-0.1)

    def test_channel_rows_must_sum_to_one(self):
        """Test a non-stochastic matrix raises InputError"""
        with pytest.raises(InputError, match="rows must sum to 1"):
            DiscreteChannel([[0.5, 0.4], [0.0, 1.0]])

    def test_to_dict(self):
        """Test kernel descriptions carry kind and parameters"""
        assert HammingMixture(0.5, 4).to_dict() == {"kind": "hamming", "alpha": 0.5, "l": 4}
        assert VonMisesSmoother(2.0).to_dict() == {"kind": "vonmises", "kappa": 2.0}

    def test_kernel_distortion(self):
        """Test each kernel reports its expected distortion"""
        assert HammingMixture(0.5, 4).distortion == pytest.approx(0.375)
        assert GaussianChannel(0.25).distortion == pytest.approx(1.5)
        assert VonMisesSmoother(0.0).distortion == pytest.approx(2.0)


class TestDistortionSpec:
    """Test distortion functions and RDPoint"""

    def test_hamming_matrix(self):
        """Test the Hamming matrix is 1 - identity"""
        assert HammingDistortion(3).to_matrix(3).tolist() == [[0, 1, 1], [1, 0, 1], [1, 1, 0]]

    def test_matrix_shape_checked(self):
        """Test a matrix of the wrong shape is rejected"""
        with pytest.raises(InputError, match="expected"):
            MatrixDistortion([[0.0, 1.0], [1.0, 0.0]]).to_matrix(3)

    def test_negative_matrix(self):
        """Test negative distortions raise InputError"""
        with pytest.raises(InputError, match="nonnegative"):
            MatrixDistortion([[0.0, -1.0]])

    def test_squared_chord(self):
        """Test 2 - 2 cos equals 4 sin^2 and spans [0, 4]"""
        d = SquaredChordCircle()
        angles = np.linspace(0, 2 * math.pi, 13)

        assert d.evaluate(0.0, angles) == pytest.approx(2.0 - 2.0 * np.cos(angles), abs=1e-14)
        assert d.evaluate(0.0, math.pi) == pytest.approx(4.0)

    def test_squared_euclidean(self):
        """Test (x - y)^2 on the line"""
        assert SquaredEuclideanReal().evaluate(1.0, -2.0) == pytest.approx(9.0)

    def test_rd_point_nonnegative(self):
        """Test negative rates are rejected"""
        with pytest.raises(InputError, match="nonnegative"):
            RDPoint(-1.0, 0.0, 0.0)


# ===== Hamming =====

class TestHammingKernel:
    """Test the mixture kernel on finite alphabets"""

    def test_point_mass_smoothing(self):
        """Test alpha * delta + (1 - alpha) * U"""
        smoothed = apply_hamming(HammingMixture(0.5, 4), DiscreteDistribution([1.0, 0.0, 0.0, 0.0]))

        assert smoothed.probs == pytest.approx([0.625, 0.125, 0.125, 0.125])

    def test_alpha_one_is_identity(self):
        """Test alpha = 1 returns the distribution itself"""
        p = DiscreteDistribution([0.1, 0.9])

        assert apply_hamming(HammingMixture(1.0, 2), p) is p

    def test_alpha_zero_is_uniform(self):
        """Test alpha = 0 returns U"""
        smoothed = apply_hamming(HammingMixture(0.0, 3), DiscreteDistribution([0.2, 0.2, 0.6]))

        assert smoothed.probs == pytest.approx([1 / 3, 1 / 3, 1 / 3])

    def test_uniform_is_fixed_point(self):
        """Test U is mapped to itself bit for bit"""
        assert apply_hamming(HammingMixture(0.3, 6), uniform(6)) == uniform(6)

    def test_alphabet_mismatch(self):
        """Test the kernel and distribution alphabets must agree"""
        with pytest.raises(InputError, match="kernel expects"):
            apply_hamming(HammingMixture(0.5, 3), uniform(2))

    def test_to_matrix_matches_apply(self):
        """Test the matrix form acts like apply_hamming"""
        kernel = HammingMixture(0.4, 5)
        p = DiscreteDistribution([0.1, 0.2, 0.3, 0.15, 0.25])
        channel = DiscreteChannel(kernel.to_matrix())

        assert channel.apply(p).probs == pytest.approx(apply_hamming(kernel, p).probs, abs=1e-15)

    def test_distortion_of_alpha(self):
        """Test d = (1 - alpha)(l - 1)/l"""
        assert hamming_distortion_of_alpha(0.5, 4) == 0.375

    def test_alpha_from_distortion(self):
        """Test the inverse conversion"""
        assert alpha_from_distortion(0.375, 4) == 0.5
        assert alpha_from_distortion(0.0, 4) == 1.0
        assert alpha_from_distortion(0.75, 4) == 0.0

    def test_conversions_are_inverse(self):
        """Test alpha -> d -> alpha on a grid"""
        for l in (2, 3, 10):
            for alpha in np.linspace(0, 1, 11):
                assert alpha_from_distortion(hamming_distortion_of_alpha(alpha, l), l) == pytest.approx(
                    alpha, abs=1e-14
                )

    def test_distortion_out_of_range(self):
        """Test d0 above (l - 1)/l raises DistortionRangeError"""
        with pytest.raises(DistortionRangeError, match="achievable interval"):
            alpha_from_distortion(0.8, 4)


# ===== Gaussian =====

class TestGaussianKernel:
    """Test the Gaussian channel for the standard normal null"""

    def test_smooth_point(self):
        """Test x -> N(alpha x, 1 - alpha^2)"""
        assert gaussian_smooth_point(2.0, 0.5) == pytest.approx((1.0, 0.75))

    def test_distortion_conversion(self):
        """Test d = 2(1 - alpha) and its inverse"""
        assert gaussian_distortion_of_alpha(0.3) == pytest.approx(1.4)
        assert gaussian_alpha_from_distortion(1.4) == pytest.approx(0.3)
        assert gaussian_alpha_from_distortion(2.0) == 0.0

    def test_distortion_out_of_range(self):
        """Test d0 = 0 and d0 > 2 are rejected"""
        with pytest.raises(DistortionRangeError):
            gaussian_alpha_from_distortion(0.0)
        with pytest.raises(DistortionRangeError):
            gaussian_alpha_from_distortion(2.5)

    def test_null_is_fixed_point(self):
        """Test smoothing the standard normal gives the standard normal back"""
        x = np.linspace(-12.0, 12.0, 4801)
        for alpha in (0.3, 0.6, 0.9):
            mean, variance = gaussian_smooth_point(x, alpha)
            for y in np.linspace(-4.0, 4.0, 9):
                smoothed = trapezoid(norm.pdf(x) * norm.pdf(y, mean, math.sqrt(variance)), x)

                assert smoothed == pytest.approx(norm.pdf(y), abs=1e-8)

    def test_distortion_against_simulation(self):
        """Test alpha(0.5) = 0.75 reproduces E(Y - X)^2 = 0.5 on simulated pairs"""
        alpha = gaussian_alpha_from_distortion(0.5)
        rng = np.random.default_rng(101)
        x = rng.standard_normal(1_000_000)
        y = alpha * x + math.sqrt(1.0 - alpha ** 2) * rng.standard_normal(x.size)

        assert alpha == 0.75
        assert np.mean((y - x) ** 2) == pytest.approx(0.5, abs=0.005)

    def test_additive_form(self):
        """Test the rescaled form N(0, 1/alpha^2 - 1) noise against N(0, 1/alpha^2)"""
        assert gaussian_additive_form(0.5) == pytest.approx((3.0, 4.0))

    def test_additive_form_needs_positive_alpha(self):
        """Test alpha = 0 has no additive form"""
        with pytest.raises(ParameterError, match="alpha > 0"):
            gaussian_additive_form(0.0)


# ===== Bessel and von Mises =====

class TestBessel:
    """Test the modified Bessel functions"""

    def test_values_at_zero(self):
        """Test I0(0) = 1 and I1(0) = 0"""
        assert bessel_i0(0.0) == 1.0
        assert bessel_i1(0.0) == 0.0

    def test_reference_values(self):
        """Test tabulated values"""
        assert bessel_i0(1.0) == pytest.approx(1.2660658777520082, rel=1e-13)
        assert bessel_i1(1.0) == pytest.approx(0.5651591039924851, rel=1e-13)
        assert bessel_i0(10.0) == pytest.approx(2815.716628466254, rel=1e-13)

    def test_overflow(self):
        """Test I0 beyond double range raises NumericError"""
        with pytest.raises(NumericError, match="overflows"):
            bessel_i0(1000.0)

    def test_log_i0_large_argument(self):
        """Test ln I0 stays finite and matches the asymptotic expansion"""
        kappa = 1000.0
        expected = kappa - 0.5 * math.log(2 * math.pi * kappa) + math.log1p(1 / (8 * kappa))

        assert log_bessel_i0(kappa) == pytest.approx(expected, rel=1e-9)

    def test_ratio_at_cap(self):
        """Test I1/I0 ~ 1 - 1/(2 kappa) at the concentration cap"""
        assert bessel_ratio(KAPPA_CAP) == pytest.approx(1.0 - 0.5 / KAPPA_CAP, abs=1e-12)

    def test_monotone(self):
        """Test I0 >= 1 and increasing, I1/I0 in [0, 1) and increasing"""
        kappas = np.linspace(0.0, 700.0, 2001)
        i0 = np.array([bessel_i0(k) for k in kappas])
        ratio = np.array([bessel_ratio(k) for k in kappas])

        assert np.all(i0 >= 1.0)
        assert np.all(np.diff(i0) > 0)
        assert np.all((ratio >= 0.0) & (ratio < 1.0))
        assert np.all(np.diff(ratio) > 0)

    def test_negative_argument(self):
        """Test negative kappa raises ParameterError"""
        with pytest.raises(ParameterError):
            log_bessel_i0(-1.0)


class TestVonMises:
    """Test the von Mises density and the kappa conversion"""

    def test_uniform_at_zero_kappa(self):
        """Test kappa = 0 gives 1/(2 pi)"""
        assert vonmises_density(1.3, 0.0, 0.0) == pytest.approx(1 / (2 * math.pi))

    def test_density_integrates_to_one(self):
        """Test the periodic trapezoid sum of the density is 1"""
        grid = 2 * math.pi * np.arange(2048) / 2048

        assert 2 * math.pi * np.mean(vonmises_density(grid, 0.7, 3.0)) == pytest.approx(1.0, abs=1e-12)

    def test_density_large_kappa(self):
        """Test the density stays finite where I0 overflows"""
        assert math.isfinite(vonmises_density(0.0, 0.0, 5000.0))

    def test_kappa_round_trip(self):
        """Test kappa -> d0 -> kappa"""
        for kappa in (0.1, 1.0, 10.0, 100.0):
            d0 = vonmises_distortion_of_kappa(kappa)

            assert vonmises_kappa_from_distortion(d0) == pytest.approx(kappa, rel=1e-8)

    @pytest.mark.parametrize("kappa", [0.5, 5.0, 50.0])
    def test_uniform_is_fixed_point(self, kappa):
        """Test averaging the kernel over uniform centers gives the uniform density"""
        centers = 2 * math.pi * np.arange(512) / 512
        for theta in (0.0, 1.0, 2.5, 4.0):
            smoothed = np.mean(vonmises_density(theta - centers, 0.0, kappa))

            assert smoothed == pytest.approx(1 / (2 * math.pi), abs=1e-10)

    def test_kappa_at_unit_distortion(self):
        """Test d0 = 1 gives I1/I0 = 1/2, kappa about 1.16"""
        kappa = vonmises_kappa_from_distortion(1.0)
        grid = 2 * math.pi * np.arange(2048) / 2048
        expected_distortion = 2 * math.pi * np.mean(vonmises_density(grid, 0.0, kappa) * (2 - 2 * np.cos(grid)))

        assert kappa == pytest.approx(1.1593, abs=1e-3)
        assert bessel_ratio(kappa) == pytest.approx(0.5, abs=1e-10)
        assert expected_distortion == pytest.approx(1.0, abs=1e-9)

    def test_distortion_out_of_range(self):
        """Test d0 outside (0, 2) is rejected"""
        with pytest.raises(DistortionRangeError):
            vonmises_kappa_from_distortion(2.0)
        with pytest.raises(DistortionRangeError):
            vonmises_kappa_from_distortion(0.0)

    def test_kappa_capped(self, caplog):
        """Test tiny d0 is capped at KAPPA_CAP with a warning"""
        with caplog.at_level(logging.WARNING, logger="rdgof.domain.kernels"):
            kappa = vonmises_kappa_from_distortion(1e-9)

        assert kappa == KAPPA_CAP
        assert "capping" in caplog.text


class TestDiscreteChannel:
    """Test the general channel matrix"""

    def test_apply(self):
        """Test sum_x p(x) W(. | x)"""
        channel = DiscreteChannel([[0.9, 0.1], [0.2, 0.8]])

        assert channel.apply(DiscreteDistribution([0.5, 0.5])).probs == pytest.approx([0.55, 0.45])
        assert channel.shape == (2, 2)

    def test_apply_size_mismatch(self):
        """Test the input alphabet must match the rows"""
        with pytest.raises(InputError, match="channel expects"):
            DiscreteChannel([[1.0, 0.0]]).apply(uniform(2))

    def test_expected_distortion(self):
        """Test the Hamming mixture matrix has expected distortion (1 - alpha)(l - 1)/l under U"""
        channel = DiscreteChannel(HammingMixture(0.5, 4).to_matrix())

        assert channel.expected_distortion(uniform(4), HammingDistortion(4)) == pytest.approx(0.375)

    def test_expected_distortion_matrix(self):
        """Test sum_x sum_y p(x) W(y | x) d(x, y) with a rectangular matrix"""
        channel = DiscreteChannel([[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
        distortion = MatrixDistortion(np.array([[0.0, 1.0, 2.0], [1.0, 3.0, 0.5]]))

        assert channel.expected_distortion(DiscreteDistribution([0.4, 0.6]), distortion) == pytest.approx(
            0.4 * 0.5 + 0.6 * 0.5
        )
