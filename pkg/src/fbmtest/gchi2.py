"""Exact null law of the sample-ACVF statistic.

The lag-k sample autocovariance of a zero-mean Gaussian vector X with
covariance S is the quadratic form X' A_k X, whose law is a weighted sum
of independent one-degree chi-squared variables; the weights are the
eigenvalues of S^{1/2} A_k S^{1/2}.  This module builds A_k, computes the
weights for the noisy-FBM null, and evaluates the resulting generalized
chi-squared distribution: characteristic function, CDF by Gil-Pelaez
inversion, quantiles, and exact sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .models import ModelSpec, covariance_matrix

__all__ = [
    "NumericalError",
    "QFWeights",
    "GChi2Law",
    "build_qf_matrix",
    "acvf_statistic",
    "null_weights",
    "empirical_chf",
]

# Eigenvalues below this fraction of the largest magnitude are dropped
# before inversion; they only add spurious oscillation.
_WEIGHT_PRUNE = 1e-14

# Acceptable relative mass of negative covariance eigenvalues (rounding
# noise on near-singular long-memory Toeplitz matrices).
_NEG_MASS_TOL = 1e-8

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


class NumericalError(RuntimeError):
    """An eigenvalue or quadrature computation failed to reach tolerance."""


def build_qf_matrix(n: int, k: int) -> np.ndarray:
    """Symmetric matrix A_k with x' A_k x equal to the lag-k sample ACVF.

    For k >= 1 the entries are 1/(2(n-k)) wherever |i-j| = k and zero
    elsewhere; for k = 0 the matrix is diag(1/n).
    """
    _check_lag(n, k)
    if k == 0:
        return np.eye(n) / n
    a = np.zeros((n, n))
    idx = np.arange(n - k)
    a[idx, idx + k] = 0.5 / (n - k)
    a[idx + k, idx] = 0.5 / (n - k)
    return a


def acvf_statistic(x, k: int) -> float:
    """Lag-k sample ACVF (1/(N-k)) sum_i x_i x_{i+k}, no mean subtraction."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    _check_lag(n, k)
    return float(x[: n - k] @ x[k:]) / (n - k)


def _check_lag(n, k):
    if not 0 <= k <= n - 1:
        raise ValueError(f"lag must lie in [0, {n - 1}], got {k}")


def _qf_apply(mat, k):
    """A_k @ mat without materializing A_k (band structure of A_k)."""
    n = mat.shape[0]
    if k == 0:
        return mat / n
    out = np.zeros_like(mat)
    out[:-k] += mat[k:]
    out[k:] += mat[:-k]
    out /= 2.0 * (n - k)
    return out


@dataclass(frozen=True)
class QFWeights:
    """Eigenvalues defining the null law, with their provenance."""

    lambdas: np.ndarray
    n: int
    k: int
    model: ModelSpec | None = None

    @property
    def mean(self) -> float:
        return float(self.lambdas.sum())

    @property
    def variance(self) -> float:
        return 2.0 * float((self.lambdas**2).sum())


def null_weights(n: int, k: int, model: ModelSpec) -> QFWeights:
    """Eigenvalues of S^{1/2} A_k S^{1/2} for the noisy-FBM null.

    S^{1/2} comes from the symmetric eigendecomposition of the covariance
    with negative eigenvalues clipped to zero; clipping is refused (raises
    :class:`NumericalError`) if the negative mass is more than rounding
    noise.
    """
    _check_lag(n, k)
    sigma = covariance_matrix(n, model)
    w, v = np.linalg.eigh(sigma)
    neg = w[w < 0.0]
    if neg.size and -neg.sum() > _NEG_MASS_TOL * w[w > 0.0].sum():
        raise NumericalError(
            f"covariance for n={n}, {model.label()} has relative negative "
            f"eigenvalue mass {-neg.sum() / w[w > 0.0].sum():.3e}"
        )
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    m = root @ _qf_apply(root, k)
    lambdas = np.linalg.eigvalsh(0.5 * (m + m.T))
    return QFWeights(lambdas=np.sort(lambdas)[::-1], n=n, k=k, model=model)


class GChi2Law:
    """Law of sum_j lambda_j U_j^2 with U_j i.i.d. standard normal.

    Accepts a :class:`QFWeights` or a bare weight sequence.  ``trunc_eps``
    is where the |CF| tail is considered negligible during inversion and
    ``quad_tol`` the absolute quadrature tolerance (the CDF itself targets
    1e-6 absolute accuracy).
    """

    def __init__(self, weights, trunc_eps: float = 1e-12, quad_tol: float = 1e-9):
        if isinstance(weights, QFWeights):
            self.weights = weights
            lam = np.asarray(weights.lambdas, dtype=float)
        else:
            lam = np.sort(np.asarray(weights, dtype=float))[::-1]
            self.weights = QFWeights(lambdas=lam, n=lam.size, k=0, model=None)
        self.trunc_eps = trunc_eps
        self.quad_tol = quad_tol
        scale = np.abs(lam).max() if lam.size else 0.0
        self._lam = lam[np.abs(lam) > _WEIGHT_PRUNE * scale] if scale > 0.0 else lam[:0]
        self._lam_abs_sum = float(np.abs(self._lam).sum())
        self._t_trunc = None
        self._grid = None

    @property
    def mean(self) -> float:
        return float(self._lam.sum())

    @property
    def stddev(self) -> float:
        return float(np.sqrt(2.0 * (self._lam**2).sum()))

    # -- characteristic function -------------------------------------------

    def chf(self, t):
        """CF prod_j (1 - 2 i t lambda_j)^{-1/2}, principal branch.

        Evaluated as exp of summed half-logs, so the product never
        over/underflows before the final exponential.
        """
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self._lam.size == 0:
            out = np.ones(t_arr.shape, dtype=complex)
        else:
            logs = np.log(1.0 - 2.0j * t_arr[:, None] * self._lam[None, :])
            out = np.exp(-0.5 * logs.sum(axis=1))
        return out if np.ndim(t) else complex(out[0])

    def _log_rho(self, t):
        u = 2.0 * np.multiply.outer(t, self._lam)
        return 0.25 * np.log1p(u * u).sum(axis=-1)

    def _delta(self, t):
        u = 2.0 * np.multiply.outer(t, self._lam)
        return 0.5 * np.arctan(u).sum(axis=-1)

    # -- CDF by Gil-Pelaez inversion ---------------------------------------

    def cdf(self, x: float) -> float:
        """P(Q <= x) via F(x) = 1/2 - (1/pi) int_0^inf Im[phi(t) e^{-itx}]/t dt.

        In polar form the integrand is sin(delta(t) - t x)/(t rho(t)) with
        delta(t) = (1/2) sum arctan(2 lambda_j t) and rho(t) = |phi(t)|^{-1}.
        The integral is truncated where |phi| < ``trunc_eps``; if that point
        is out of reach (few-weight laws decay slowly) the remainder is a
        Fourier-type tail handed to QUADPACK's oscillatory integrator.
        """
        x = float(x)
        lam = self._lam
        if lam.size == 0:
            return 0.0 if x < 0.0 else 1.0
        if np.all(lam > 0.0) and x <= 0.0:
            return 0.0
        if np.all(lam < 0.0) and x >= 0.0:
            return 1.0
        integral = self._gil_pelaez(x)
        return float(np.clip(0.5 - integral / np.pi, 0.0, 1.0))

    def _integrand(self, t, x):
        th = self._delta(t) - t * x
        return np.sin(th) * np.exp(-self._log_rho(t)) / t

    def _gil_pelaez(self, x):
        grid = self._ensure_grid(abs(x))
        coarse = self._grid_integral(grid, 0, x)
        fine = self._grid_integral(grid, 1, x)
        rebuilds = 0
        while abs(fine - coarse) > self.quad_tol:
            rebuilds += 1
            if rebuilds > 3:
                raise NumericalError(
                    f"CDF quadrature did not converge on (0, {grid['t_end']:.3g}) at x={x:.6g}"
                )
            grid = self._build_grid(grid["speed"], 2 * grid["npanels"])
            self._grid = grid
            coarse = self._grid_integral(grid, 0, x)
            fine = self._grid_integral(grid, 1, x)
        tail = 0.0
        if grid["tail_start"] is not None:
            tail = self._fourier_tail(grid["tail_start"], x)
        return fine + tail

    # The amplitude exp(-log rho)/t and the phase offset delta are
    # independent of x, so the quadrature grid is computed once per law
    # (two nesting levels; their disagreement is the error estimate) and
    # each CDF evaluation only pays for the sine.

    def _ensure_grid(self, abs_x):
        grid = self._grid
        if grid is not None and self._lam_abs_sum + abs_x <= grid["speed"]:
            return grid
        x_cap = max(2.0 * abs_x, abs(self.mean) + 16.0 * self.stddev)
        grid = self._build_grid(self._lam_abs_sum + x_cap)
        self._grid = grid
        return grid

    def _build_grid(self, speed, min_panels=8, budget=4096):
        h = 0.5 * np.pi / speed  # at most a quarter phase-turn per panel
        t_trunc = self._truncation_point()
        if t_trunc <= budget * h:
            t_end, tail_start = t_trunc, None
        else:
            t_end, tail_start = budget * h, budget * h
        npanels = max(min_panels, int(np.ceil(t_end / h)))
        levels = [self._grid_level(t_end, npanels), self._grid_level(t_end, 2 * npanels)]
        return {"speed": speed, "t_end": t_end, "tail_start": tail_start,
                "npanels": npanels, "levels": levels}

    def _grid_level(self, t_end, npanels, _chunk=1 << 15):
        edges = np.linspace(0.0, t_end, npanels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        amp = np.empty_like(nodes)
        delta = np.empty_like(nodes)
        for start in range(0, nodes.size, _chunk):
            sl = slice(start, start + _chunk)
            amp[sl] = np.exp(-self._log_rho(nodes[sl])) / nodes[sl]
            delta[sl] = self._delta(nodes[sl])
        return nodes, amp, delta, half

    def _grid_integral(self, grid, level, x):
        nodes, amp, delta, half = grid["levels"][level]
        vals = np.sin(delta - nodes * x) * amp
        return float(vals.reshape(half.size, -1) @ _GL_WEIGHTS @ half)

    def _truncation_point(self):
        if self._t_trunc is not None:
            return self._t_trunc
        target = -np.log(self.trunc_eps)

        def short(t):
            return float(self._log_rho(np.asarray([t]))[0]) - target

        lo = 0.0
        hi = 1.0 / (2.0 * np.abs(self._lam).max())
        while short(hi) < 0.0:
            lo = hi
            hi *= 2.0
            if hi > 1e300:
                self._t_trunc = np.inf
                return self._t_trunc
        self._t_trunc = brentq(short, lo, hi, rtol=1e-3)
        return self._t_trunc

    def _fourier_tail(self, t_start, x):
        def amp_sin(t):
            return np.sin(self._delta(t)) / (t * np.exp(self._log_rho(t)))

        def amp_cos(t):
            return np.cos(self._delta(t)) / (t * np.exp(self._log_rho(t)))

        if x == 0.0:
            val, err = quad(amp_sin, t_start, np.inf, epsabs=self.quad_tol, limit=500)[:2]
            self._check_quad(err)
            return val
        # sin(delta - tx) = sin(delta)cos(t|x|) - sign(x) cos(delta)sin(t|x|)
        w = abs(x)
        cos_part = quad(
            amp_sin, t_start, np.inf, weight="cos", wvar=w,
            epsabs=self.quad_tol, limit=500, limlst=500, full_output=1,
        )
        sin_part = quad(
            amp_cos, t_start, np.inf, weight="sin", wvar=w,
            epsabs=self.quad_tol, limit=500, limlst=500, full_output=1,
        )
        self._check_quad(cos_part[1])
        self._check_quad(sin_part[1])
        return cos_part[0] - np.sign(x) * sin_part[0]

    def _check_quad(self, abserr):
        if not np.isfinite(abserr) or abserr > 1e-7:
            raise NumericalError(f"oscillatory tail quadrature error {abserr:.3e} too large")

    # -- quantiles ------------------------------------------------------------

    def quantile(self, p: float) -> float:
        """x with cdf(x) = p (to 1e-6 in probability), by bracketed root search."""
        if not 0.0 < p < 1.0:
            raise ValueError(f"quantile order must lie in (0, 1), got {p}")
        sd = self.stddev
        if sd == 0.0:
            return 0.0
        lo = self.mean - 12.0 * sd
        hi = self.mean + 12.0 * sd
        while self.cdf(lo) > p:
            lo -= hi - lo
        while self.cdf(hi) < p:
            hi += hi - lo
        root = brentq(lambda x: self.cdf(x) - p, lo, hi, xtol=1e-12 * max(1.0, sd))
        if abs(self.cdf(root) - p) > 1e-6:
            raise NumericalError(f"quantile refinement stalled at p={p}")
        return float(root)

    def quantile_mc(self, p, size: int = 10_000, rng=None):
        """Empirical quantile(s) of ``size`` exact replications."""
        samples = self.sample(size, rng)
        return np.quantile(samples, p)

    # -- sampling ---------------------------------------------------------------

    def sample(self, count: int, rng=None) -> np.ndarray:
        """``count`` i.i.d. draws of sum lambda_j U_j^2, chunked for memory."""
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        lam = self._lam
        if lam.size == 0:
            return np.zeros(count)
        out = np.empty(count)
        chunk = max(1, int(2e7) // lam.size)
        for start in range(0, count, chunk):
            size = min(chunk, count - start)
            z = rng.standard_normal((size, lam.size))
            out[start : start + size] = (z * z) @ lam
        return out


def empirical_chf(samples, t) -> np.ndarray:
    """Empirical characteristic function mean(exp(i t s)) on a t grid."""
    samples = np.asarray(samples, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    acc = np.zeros(t.size, dtype=complex)
    chunk = max(1, int(2e6) // max(1, t.size))
    for start in range(0, samples.size, chunk):
        block = samples[start : start + chunk]
        acc += np.exp(1j * np.multiply.outer(t, block)).sum(axis=1)
    return acc / samples.size
