"""Fixed Gaussian kernel banks used to featurize post-similarity scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, DegenerateInputError

EXACT_MATCH_MU = 1.0
EXACT_MATCH_SIGMA = 0.001
SOFT_SIGMA = 0.01


@dataclass(frozen=True)
class KernelBank:
    """K Gaussian kernels with fixed (non-trainable) means and widths.

    Means are dimensionless similarity levels in [-1, 1]; widths must be
    strictly positive.
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        if mu.ndim != 1 or mu.shape != sigma.shape or mu.size < 1:
            raise ConfigError("kernel bank needs matching 1D mu/sigma with K >= 1")
        if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(sigma)):
            raise ConfigError("kernel parameters must be finite")
        if np.any(sigma <= 0.0):
            raise ConfigError("kernel widths must be strictly positive")

    @property
    def size(self) -> int:
        return int(self.mu.size)

    @classmethod
    def default(cls, num_kernels: int = 10) -> "KernelBank":
        """Bank of ``num_kernels - 1`` soft kernels plus one exact-match kernel.

        Soft kernel means sit at the centers of even bins over [-1, 1] with
        width 0.01; the exact-match kernel (mu=1, sigma=0.001) fires only for
        near-identical vectors.
        """
        if num_kernels < 1:
            raise ConfigError("num_kernels must be >= 1")
        if num_kernels == 1:
            return cls(mu=np.array([EXACT_MATCH_MU]), sigma=np.array([EXACT_MATCH_SIGMA]))
        soft = num_kernels - 1
        step = 2.0 / soft
        mus = -1.0 + step * (np.arange(soft) + 0.5)
        return cls(
            mu=np.append(mus, EXACT_MATCH_MU),
            sigma=np.append(np.full(soft, SOFT_SIGMA), EXACT_MATCH_SIGMA),
        )

    def features(self, scores: np.ndarray) -> np.ndarray:
        """Kernel activations for an array of similarity scores.

        Output shape is ``scores.shape + (K,)`` with every activation in
        (0, 1]; activations below float64 range underflow to exactly 0.
        """
        scores = np.asarray(scores, dtype=np.float64)
        diff = scores[..., None] - self.mu
        return np.exp(-(diff * diff) / (2.0 * self.sigma * self.sigma))


def gaussian_kernel_vector(score, bank: KernelBank) -> ad.Tensor:
    """Differentiable K-vector of kernel activations for one similarity score."""
    score_t = score if isinstance(score, ad.Tensor) else ad.Tensor(score)
    if score_t.data.ndim != 0:
        raise DegenerateInputError("gaussian_kernel_vector expects a scalar score")
    if not np.isfinite(score_t.data):
        raise DegenerateInputError("gaussian_kernel_vector requires a finite score")
    diff = ad.sub(score_t, ad.Tensor(bank.mu))
    scale = ad.Tensor(-1.0 / (2.0 * bank.sigma * bank.sigma))
    return ad.exp(ad.mul(ad.mul(diff, diff), scale))
