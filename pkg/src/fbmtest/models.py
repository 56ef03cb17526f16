"""Closed-form covariance structure of the processes under study.

Everything here is an exact formula: the autocovariance of fractional
Gaussian noise (FGN, the unit-lag increments of fractional Brownian
motion), the same autocovariance after additive white Gaussian
measurement noise is differenced into the increments, the full Toeplitz
covariance matrix of an increment vector, and the (diagonal) covariance
of scaled-Brownian-motion increments.

Sampling is at unit spacing throughout, so ``fgn_acvf(0, h) == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

__all__ = [
    "ModelSpec",
    "SbmSpec",
    "fgn_acvf",
    "noisy_increment_acvf",
    "covariance_matrix",
    "sbm_increment_cov",
]


@dataclass(frozen=True)
class ModelSpec:
    """Noisy-FBM hypothesis: Hurst index and noise standard deviation.

    ``sigma`` is the standard deviation of the i.i.d. Gaussian noise
    added to each observed position; ``sigma = 0`` is pure FBM.
    """

    hurst: float
    sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    def label(self) -> str:
        return f"noisy-fbm(hurst={self.hurst:g},sigma={self.sigma:g})"


@dataclass(frozen=True)
class SbmSpec:
    """Scaled Brownian motion B(t^alpha); Hurst-equivalent exponent is alpha/2."""

    alpha: float

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    def label(self) -> str:
        return f"sbm(alpha={self.alpha:g})"


def fgn_acvf(k, hurst):
    """Autocovariance of unit-lag FBM increments at integer lag(s) ``k``.

    r(k) = ((k+1)^{2H} + |k-1|^{2H} - 2 k^{2H}) / 2, so r(0) = 1 for
    every H and r(k) = 0 for k >= 1 when H = 1/2.

    Parameters
    ----------
    k : int or array_like of int
        Nonnegative lag(s).
    hurst : float
        Hurst index in (0, 1).

    Returns
    -------
    float or ndarray
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise ValueError("lags must be nonnegative")
    two_h = 2.0 * hurst
    # |k-1|^{2H} evaluates to exactly 0 at k=1; no special-casing needed.
    r = 0.5 * ((k_arr + 1.0) ** two_h + np.abs(k_arr - 1.0) ** two_h - 2.0 * k_arr**two_h)
    return r if isinstance(k, np.ndarray) else float(r)


def noisy_increment_acvf(k, model: ModelSpec):
    """Autocovariance of noisy-FBM increments at lag(s) ``k``.

    Differencing positions contaminated by i.i.d. noise of variance
    sigma^2 adds an MA(1)-type correction: +2 sigma^2 at lag 0 and
    -sigma^2 at lag 1; lags beyond 1 are untouched.
    """
    r = fgn_acvf(k, model.hurst)
    s2 = model.sigma**2
    k_arr = np.asarray(k)
    r = np.asarray(r, dtype=float) + np.where(k_arr == 0, 2.0 * s2, np.where(k_arr == 1, -s2, 0.0))
    return r if isinstance(k, np.ndarray) else float(r)


def covariance_matrix(n: int, model: ModelSpec) -> np.ndarray:
    """Symmetric Toeplitz covariance of ``n`` consecutive noisy-FBM increments."""
    if n < 1:
        raise ValueError(f"matrix dimension must be >= 1, got {n}")
    first_row = noisy_increment_acvf(np.arange(n), model)
    return toeplitz(first_row)


def sbm_increment_cov(i: int, j: int, sbm: SbmSpec) -> float:
    """Covariance of the i-th and j-th unit-lag SBM increments.

    B(t^alpha) inherits independent increments from Brownian motion
    through the monotone time change t -> t^alpha, so the covariance is
    diagonal with Var(B((i+1)^alpha) - B(i^alpha)) = (i+1)^alpha - i^alpha.
    """
    if i < 0 or j < 0:
        raise ValueError("increment indices must be nonnegative")
    if i != j:
        return 0.0
    a = sbm.alpha
    return float((i + 1.0) ** a - float(i) ** a)
