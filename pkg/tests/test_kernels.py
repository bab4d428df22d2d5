"""Kernel bank construction and Gaussian kernel features."""

import numpy as np
import pytest

from misinfo.autodiff import Tensor
from misinfo.errors import ConfigError, DegenerateInputError
from misinfo.kernels import EXACT_MATCH_MU, EXACT_MATCH_SIGMA, KernelBank, gaussian_kernel_vector

from conftest import gradient_max_error


class TestKernelBank:
    def test_default_has_exactly_one_exact_match_kernel(self):
        bank = KernelBank.default(10)
        exact = (bank.mu == EXACT_MATCH_MU) & (bank.sigma == EXACT_MATCH_SIGMA)
        assert exact.sum() == 1
        assert bank.size == 10

    def test_soft_means_evenly_spaced_in_unit_interval(self):
        bank = KernelBank.default(10)
        soft = np.sort(bank.mu[:-1])
        gaps = np.diff(soft)
        np.testing.assert_allclose(gaps, gaps[0], atol=1e-12)
        assert soft.min() > -1.0 and soft.max() < 1.0
        assert np.all(bank.sigma[:-1] == 0.01)

    def test_single_kernel_bank(self):
        bank = KernelBank.default(1)
        assert bank.size == 1 and bank.mu[0] == 1.0

    @pytest.mark.parametrize("bad", [0, -3])
    def test_invalid_size(self, bad):
        with pytest.raises(ConfigError):
            KernelBank.default(bad)

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ConfigError):
            KernelBank(mu=np.array([0.0]), sigma=np.array([0.0]))

    def test_features_shape_and_range(self):
        bank = KernelBank.default(5)
        feats = bank.features(np.array([[0.1, -0.5], [1.0, 0.9]]))
        assert feats.shape == (2, 2, 5)
        assert np.all(feats >= 0.0) and np.all(feats <= 1.0)


class TestGaussianKernelVector:
    def test_component_is_one_at_its_center(self):
        bank = KernelBank.default(6)
        out = gaussian_kernel_vector(float(bank.mu[2]), bank)
        assert out.data[2] == pytest.approx(1.0)

    def test_exact_match_kernel_fires_at_one(self):
        bank = KernelBank.default(10)
        out = gaussian_kernel_vector(1.0, bank)
        assert out.data[-1] == pytest.approx(1.0)

    def test_exact_match_kernel_dead_at_090(self):
        # exp(-0.01 / (2e-6)) underflows: effectively zero.
        bank = KernelBank.default(10)
        out = gaussian_kernel_vector(0.9, bank)
        assert out.data[-1] < 1e-100

    def test_nonfinite_score_rejected(self):
        with pytest.raises(DegenerateInputError):
            gaussian_kernel_vector(float("nan"), KernelBank.default(3))

    def test_vector_score_rejected(self):
        with pytest.raises(DegenerateInputError):
            gaussian_kernel_vector(Tensor([0.1, 0.2]), KernelBank.default(3))

    @pytest.mark.parametrize("seed", range(100))
    def test_maximized_at_center_and_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        bank = KernelBank(mu=rng.uniform(-1, 1, size=4), sigma=rng.uniform(0.05, 0.5, size=4))
        k = int(rng.integers(0, 4))
        delta = float(rng.uniform(0.01, 0.5))
        center = gaussian_kernel_vector(float(bank.mu[k]), bank).data[k]
        left = gaussian_kernel_vector(float(bank.mu[k] - delta), bank).data[k]
        right = gaussian_kernel_vector(float(bank.mu[k] + delta), bank).data[k]
        assert center == pytest.approx(1.0)
        assert left < center and right < center
        assert left == pytest.approx(right, rel=1e-9)

    @pytest.mark.parametrize("seed", range(25))
    def test_gradient_wrt_score(self, seed):
        rng = np.random.default_rng(seed)
        bank = KernelBank(mu=rng.uniform(-1, 1, size=3), sigma=rng.uniform(0.2, 0.8, size=3))
        fn = lambda p: gaussian_kernel_vector(p["m"], bank)
        assert gradient_max_error(fn, {"m": rng.uniform(-1, 1)}) < 1e-4

    def test_matches_batch_features(self):
        # The vectorized bank.features path and the differentiable op must agree.
        bank = KernelBank.default(7)
        scores = np.array([-0.3, 0.4, 1.0])
        batch = bank.features(scores)
        for i, m in enumerate(scores):
            np.testing.assert_allclose(gaussian_kernel_vector(float(m), bank).data, batch[i], atol=1e-15)
