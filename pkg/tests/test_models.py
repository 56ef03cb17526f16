"""Closed-form covariance structure: exact values and structural invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbmtest.models import (
    ModelSpec,
    SbmSpec,
    covariance_matrix,
    fgn_acvf,
    noisy_increment_acvf,
    sbm_increment_cov,
)

# High-precision reference values (arbitrary-precision evaluation of the
# closed forms, 30 significant digits, rounded to double).
FGN_R1_H07 = 0.31950791077289426  # (2^1.4 - 2)/2
RM1_H03_S03 = -0.33214171674480096  # (2^0.6 - 2)/2 - 0.09
SBM_VAR_I2_A06 = 0.41746547842136467  # 3^0.6 - 2^0.6


class TestFgnAcvf:
    def test_lag_zero_is_one_for_any_hurst(self):
        for h in (0.05, 0.37, 0.5, 0.93):
            assert fgn_acvf(0, h) == pytest.approx(1.0, abs=1e-15)

    def test_vanishes_at_half_for_positive_lags(self):
        for k in (1, 2, 5, 100):
            assert fgn_acvf(k, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_reference_value_h07(self):
        assert fgn_acvf(1, 0.7) == pytest.approx(FGN_R1_H07, rel=1e-14)

    def test_accepts_lag_arrays(self):
        lags = np.arange(10)
        vals = fgn_acvf(lags, 0.3)
        assert vals.shape == (10,)
        assert vals[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("hurst", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_hurst_outside_open_interval(self, hurst):
        with pytest.raises(ValueError, match="hurst"):
            fgn_acvf(1, hurst)

    @given(st.floats(min_value=0.01, max_value=0.99))
    @settings(max_examples=40, deadline=None)
    def test_telescoping_second_difference(self, hurst):
        # r(k) equals half the second difference of k^{2H}, evaluated
        # independently via np.diff on the power sequence.
        k = np.arange(0, 102, dtype=float)
        second_diff = np.diff(k ** (2.0 * hurst), 2)
        lags = np.arange(1, 101)
        expected = 0.5 * second_diff
        got = fgn_acvf(lags, hurst)
        np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-12)

    @given(st.sampled_from([0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9]))
    @settings(max_examples=8, deadline=None)
    def test_sign_structure(self, hurst):
        vals = fgn_acvf(np.arange(1, 101), hurst)
        if hurst < 0.5:
            assert np.all(vals < 0.0)
        else:
            assert np.all(vals > 0.0)

    @pytest.mark.parametrize("hurst", [0.3, 0.7])
    def test_power_law_asymptote(self, hurst):
        k = 10_000
        ratio = fgn_acvf(k, hurst) / (hurst * (2 * hurst - 1) * k ** (2 * hurst - 2))
        assert 0.99 <= ratio <= 1.01

    def test_summability_contrast(self):
        # H < 1/2: |r| is summable, so late partial-sum increments are
        # small and keep shrinking.  H > 1/2: partial sums diverge.
        lags = np.arange(1, 100_001)
        absr_03 = np.abs(fgn_acvf(lags, 0.3))
        cum = np.cumsum(absr_03)
        last_decade = cum[-1] - cum[9_999]
        prev_decade = cum[9_999] - cum[999]
        assert last_decade < 0.005
        assert last_decade < prev_decade / 2.0

        absr_07 = np.abs(fgn_acvf(lags, 0.7))
        cum7 = np.cumsum(absr_07)
        assert cum7[-1] > 1.1 * cum7[9_999]


class TestNoisyIncrementAcvf:
    def test_lag0_adds_twice_noise_variance(self):
        assert noisy_increment_acvf(0, ModelSpec(0.5, 0.2)) == pytest.approx(1.08, rel=1e-14)

    def test_lag1_subtracts_noise_variance(self):
        got = noisy_increment_acvf(1, ModelSpec(0.3, 0.3))
        assert got == pytest.approx(RM1_H03_S03, rel=1e-14)

    def test_noise_does_not_touch_higher_lags(self):
        assert noisy_increment_acvf(2, ModelSpec(0.5, 0.9)) == pytest.approx(0.0, abs=1e-12)
        for k in (2, 3, 10):
            assert noisy_increment_acvf(k, ModelSpec(0.3, 0.7)) == pytest.approx(
                fgn_acvf(k, 0.3), rel=1e-14
            )

    def test_sigma_zero_reduces_to_fgn(self):
        lags = np.arange(6)
        np.testing.assert_allclose(
            noisy_increment_acvf(lags, ModelSpec(0.7, 0.0)), fgn_acvf(lags, 0.7), rtol=1e-15
        )

    def test_lag0_matches_simulated_variance(self):
        # Brute-force check of r_M(0): sample variance of simulated
        # increments (one FGN draw plus differenced noise per sample).
        rng = np.random.default_rng(20240811)
        n = 1_000_000
        sigma = 0.2
        x = rng.standard_normal(n) + sigma * np.diff(rng.standard_normal(n + 1))
        expected = noisy_increment_acvf(0, ModelSpec(0.5, sigma))
        assert x.var() == pytest.approx(expected, rel=0.01)


class TestModelSpecValidation:
    def test_rejects_bad_hurst(self):
        with pytest.raises(ValueError, match="hurst"):
            ModelSpec(1.2, 0.1)

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError, match="sigma"):
            ModelSpec(0.5, -0.1)

    def test_sigma_zero_allowed(self):
        assert ModelSpec(0.5, 0.0).sigma == 0.0


class TestCovarianceMatrix:
    def test_one_by_one(self):
        m = covariance_matrix(1, ModelSpec(0.5, 0.0))
        np.testing.assert_allclose(m, [[1.0]])

    def test_three_by_three_example(self):
        m = covariance_matrix(3, ModelSpec(0.5, 0.2))
        expected = [[1.08, -0.04, 0.0], [-0.04, 1.08, -0.04], [0.0, -0.04, 1.08]]
        np.testing.assert_allclose(m, expected, atol=1e-15)

    def test_rejects_zero_dimension(self):
        with pytest.raises(ValueError, match="dimension"):
            covariance_matrix(0, ModelSpec(0.5, 0.0))

    @pytest.mark.parametrize("n", [1, 5, 50, 200])
    @pytest.mark.parametrize("hurst", [0.1, 0.3, 0.5, 0.7, 0.9])
    @pytest.mark.parametrize("sigma", [0.0, 0.3, 1.0])
    def test_structural_invariants(self, n, hurst, sigma):
        m = covariance_matrix(n, ModelSpec(hurst, sigma))
        np.testing.assert_array_equal(m, m.T)
        # Toeplitz: every diagonal is constant.
        for d in range(1, n):
            diag = np.diagonal(m, d)
            assert np.all(diag == diag[0])
        eig = np.linalg.eigvalsh(m)
        assert eig.min() >= -1e-10 * eig.max()

    def test_large_long_memory_matrix_positive_definite(self):
        eig = np.linalg.eigvalsh(covariance_matrix(1000, ModelSpec(0.3, 0.3)))
        assert eig.min() > 0.0


class TestSbmIncrementCov:
    def test_standard_bm(self):
        assert sbm_increment_cov(0, 0, SbmSpec(1.0)) == pytest.approx(1.0)

    def test_off_diagonal_is_zero(self):
        assert sbm_increment_cov(3, 5, SbmSpec(1.4)) == 0.0

    def test_reference_variance(self):
        assert sbm_increment_cov(2, 2, SbmSpec(0.6)) == pytest.approx(SBM_VAR_I2_A06, rel=1e-14)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError, match="alpha"):
            SbmSpec(0.0)
        with pytest.raises(ValueError, match="alpha"):
            SbmSpec(-1.0)

    def test_rejects_negative_indices(self):
        with pytest.raises(ValueError):
            sbm_increment_cov(-1, 0, SbmSpec(1.0))
