"""Exact simulation of FGN, noisy-FBM increments, and SBM increments.

Two exact methods are provided for the stationary FGN part:

* ``circulant-embedding`` -- Davies-Harte / Wood-Chan embedding of the
  Toeplitz covariance into a circulant, O(N log N) per sample.  Raises
  :class:`EmbeddingError` if the circulant spectrum has negative mass
  beyond tolerance (then retry with the factorization method).
* ``covariance-factorization`` -- Cholesky (or clipped eigendecomposition)
  of the exact N x N covariance, O(N^3) setup, exact for any PSD case.

Reproducibility: replications are keyed by ``(seed, replication_index)``
through independent ``SeedSequence`` spawns, so any parallel partition of
the replication range yields the same aggregate draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ModelSpec, SbmSpec, fgn_acvf

__all__ = [
    "SimConfig",
    "EmbeddingError",
    "replication_stream",
    "FgnSampler",
    "NoisyFbmSampler",
    "SbmSampler",
    "simulate_fgn",
    "simulate_noisy_fbm_increments",
    "simulate_sbm_increments",
]

METHODS = ("circulant-embedding", "covariance-factorization")

# Relative tolerance on negative circulant eigenvalues before the
# embedding is declared invalid; tiny negatives are clipped to zero.
_EMBED_TOL = 1e-10


class EmbeddingError(RuntimeError):
    """Circulant embedding produced significantly negative eigenvalues."""


@dataclass(frozen=True)
class SimConfig:
    """Length, seed, and method for one simulation run."""

    n: int
    seed: int = 0
    method: str = "circulant-embedding"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"series length must be >= 1, got {self.n}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


def replication_stream(seed: int, replication: int = 0) -> np.random.Generator:
    """Independent generator for one replication index.

    Streams for distinct ``replication`` values never share state, and the
    mapping is a pure function of ``(seed, replication)``.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication,)))


class FgnSampler:
    """Exact sampler for N consecutive unit-lag FBM increments.

    Precomputes the circulant spectrum (or covariance factor) once so a
    Monte Carlo loop pays only the per-sample FFT / matvec cost.
    """

    def __init__(self, n: int, hurst: float, method: str = "circulant-embedding"):
        if n < 1:
            raise ValueError(f"series length must be >= 1, got {n}")
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {method!r}")
        self.n = n
        self.hurst = hurst
        self.method = method
        if method == "circulant-embedding":
            self._eigenvalues = self._embed_spectrum(n, hurst)
            self._factor = None
        else:
            self._eigenvalues = None
            self._factor = self._covariance_factor(n, hurst)

    @staticmethod
    def _embed_spectrum(n, hurst):
        # First row of the 2N circulant: r(0..N) mirrored, with the true
        # ACVF value r(N) at the Nyquist position.
        r = fgn_acvf(np.arange(n + 1), hurst)
        c = np.concatenate([r, r[-2:0:-1]])
        lam = np.fft.fft(c).real
        floor = -_EMBED_TOL * lam.max()
        if lam.min() < floor:
            raise EmbeddingError(
                f"circulant embedding failed for n={n}, hurst={hurst}: "
                f"min eigenvalue {lam.min():.3e} below tolerance {floor:.3e}"
            )
        return np.clip(lam, 0.0, None)

    @staticmethod
    def _covariance_factor(n, hurst):
        from scipy.linalg import toeplitz

        cov = toeplitz(fgn_acvf(np.arange(n), hurst))
        try:
            return np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            # Near-singular long-memory case: clipped symmetric root.
            w, v = np.linalg.eigh(cov)
            return v * np.sqrt(np.clip(w, 0.0, None))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.method == "circulant-embedding":
            return self._sample_circulant(rng)
        return self._factor @ rng.standard_normal(self.n)

    def _sample_circulant(self, rng):
        n = self.n
        m = 2 * n
        lam = self._eigenvalues
        z1 = rng.standard_normal(n + 1)
        z2 = rng.standard_normal(n - 1)
        w = np.zeros(m, dtype=complex)
        w[0] = np.sqrt(lam[0] / m) * z1[0]
        w[n] = np.sqrt(lam[n] / m) * z1[n]
        half = np.sqrt(lam[1:n] / (2.0 * m))
        w[1:n] = half * (z1[1:n] + 1j * z2)
        w[m - 1 : n : -1] = np.conj(w[1:n])
        # Hermitian-symmetric w => the transform is real up to rounding.
        return np.fft.fft(w)[:n].real


class NoisyFbmSampler:
    """FGN plus the first difference of (N+1) i.i.d. position noises.

    The noise is realized per observation time and differenced, which is
    what produces the exact MA(1)-type lag-0/lag-1 correction in the
    increment autocovariance.  The FGN draw happens first, so for a shared
    stream the FGN component is bit-identical whether sigma is 0 or not.
    """

    def __init__(self, n: int, model: ModelSpec, method: str = "circulant-embedding"):
        self.n = n
        self.model = model
        self._fgn = FgnSampler(n, model.hurst, method)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        y = self._fgn.sample(rng)
        if self.model.sigma > 0.0:
            noise = self.model.sigma * rng.standard_normal(self.n + 1)
            y = y + np.diff(noise)
        return y


class SbmSampler:
    """Independent zero-mean Gaussian increments of B(t^alpha) at unit spacing."""

    def __init__(self, n: int, sbm: SbmSpec):
        self.n = n
        self.sbm = sbm
        t = np.arange(n + 1, dtype=float)
        self._stds = np.sqrt(np.diff(t**sbm.alpha))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self._stds * rng.standard_normal(self.n)


def simulate_fgn(config: SimConfig, hurst: float) -> np.ndarray:
    """One exact FGN sample of length ``config.n`` (replication index 0)."""
    sampler = FgnSampler(config.n, hurst, config.method)
    return sampler.sample(replication_stream(config.seed, 0))


def simulate_noisy_fbm_increments(config: SimConfig, model: ModelSpec) -> np.ndarray:
    """One exact sample of noisy-FBM increments (replication index 0)."""
    sampler = NoisyFbmSampler(config.n, model, config.method)
    return sampler.sample(replication_stream(config.seed, 0))


def simulate_sbm_increments(config: SimConfig, sbm: SbmSpec) -> np.ndarray:
    """One sample of SBM increments (replication index 0)."""
    sampler = SbmSampler(config.n, sbm)
    return sampler.sample(replication_stream(config.seed, 0))
