"""Two-sided ACVF test for noisy FBM, and critical-surface sweeps.

The statistic is the lag-k sample autocovariance of the increments; under
the null (FBM with Hurst H0 plus white noise of magnitude sigma0) its law
is the generalized chi-squared of :mod:`fbmtest.gchi2`.  The acceptance
interval is [q_{a/2}, q_{1-a/2}] of that law, closed: equality with an
endpoint retains the null.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import csv
import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .gchi2 import GChi2Law, NumericalError, acvf_statistic, null_weights
from .models import ModelSpec

__all__ = [
    "TestConfig",
    "TestOutcome",
    "AcvfTest",
    "run_test",
    "SurfaceNode",
    "CriticalSurface",
    "build_critical_surface",
    "save_surface",
    "load_surface",
]

QUANTILE_MODES = ("analytic", "monte-carlo")

# Stream index reserved for null-law Monte Carlo draws, far above any
# plausible replication index, so it never collides with simulation
# streams spawned from the same seed.
_MC_STREAM = 2**32 - 1


@dataclass(frozen=True)
class TestConfig:
    """Null model, lag, level, and quantile mode for one test."""

    model0: ModelSpec
    n: int
    k: int = 1
    level: float = 0.05
    mode: str = "analytic"
    mc_reps: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if not 0 <= self.k <= self.n - 1:
            raise ValueError(f"lag must lie in [0, {self.n - 1}], got {self.k}")
        if self.mode not in QUANTILE_MODES:
            raise ValueError(f"mode must be one of {QUANTILE_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    lower: float
    upper: float
    p_value: float
    reject: bool

    def to_dict(self) -> dict:
        return asdict(self)


class AcvfTest:
    """A test with its null law and critical interval built once.

    Construction does the eigenvalue work; :meth:`evaluate` and
    :meth:`decide` are then cheap, which is what Monte Carlo loops need.
    """

    def __init__(self, config: TestConfig):
        self.config = config
        self.weights = null_weights(config.n, config.k, config.model0)
        self.law = GChi2Law(self.weights)
        half = config.level / 2.0
        if config.mode == "analytic":
            self._mc_samples = None
            self.lower = self.law.quantile(half)
            self.upper = self.law.quantile(1.0 - half)
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence(config.seed, spawn_key=(_MC_STREAM,))
            )
            self._mc_samples = np.sort(self.law.sample(config.mc_reps, rng))
            self.lower, self.upper = np.quantile(self._mc_samples, [half, 1.0 - half])

    def statistic(self, x) -> float:
        return acvf_statistic(x, self.config.k)

    def decide(self, x) -> bool:
        """Reject/retain only; skips the p-value computation."""
        s = self.statistic(x)
        return s < self.lower or s > self.upper

    def null_cdf(self, value: float) -> float:
        if self._mc_samples is None:
            return self.law.cdf(value)
        rank = np.searchsorted(self._mc_samples, value, side="right")
        return rank / self._mc_samples.size

    def evaluate(self, x) -> TestOutcome:
        if len(x) != self.config.n:
            raise ValueError(
                f"series length {len(x)} does not match configured n={self.config.n}"
            )
        s = self.statistic(x)
        f = self.null_cdf(s)
        p = min(1.0, max(0.0, 2.0 * min(f, 1.0 - f)))
        return TestOutcome(
            statistic=s,
            lower=float(self.lower),
            upper=float(self.upper),
            p_value=p,
            reject=bool(s < self.lower or s > self.upper),
        )


def run_test(x, config: TestConfig) -> TestOutcome:
    """Test one increment series against the configured null."""
    return AcvfTest(config).evaluate(x)


# -- critical surfaces ---------------------------------------------------------


@dataclass(frozen=True)
class SurfaceNode:
    hurst: float
    sigma: float
    q_lower: float
    q_upper: float
    error: str | None = None


@dataclass(frozen=True)
class CriticalSurface:
    n: int
    level: float
    k: int
    mode: str
    seed: int
    nodes: tuple[SurfaceNode, ...]

    def meta(self) -> dict:
        return {"n": self.n, "a": self.level, "k": self.k, "mode": self.mode, "seed": self.seed}


def _node_key(h, s):
    return (round(float(h), 10), round(float(s), 10))


def _compute_node(n, k, level, hurst, sigma, mode, mc_reps, rng):
    try:
        law = GChi2Law(null_weights(n, k, ModelSpec(hurst, sigma)))
        half = level / 2.0
        if mode == "analytic":
            q_lo, q_hi = law.quantile(half), law.quantile(1.0 - half)
        else:
            q_lo, q_hi = law.quantile_mc([half, 1.0 - half], mc_reps, rng)
        return SurfaceNode(hurst, sigma, float(q_lo), float(q_hi))
    except (ValueError, NumericalError, np.linalg.LinAlgError) as exc:
        return SurfaceNode(hurst, sigma, float("nan"), float("nan"),
                           f"{type(exc).__name__}: {exc}")


def build_critical_surface(
    n: int,
    level: float,
    k: int,
    hursts,
    sigmas,
    mode: str = "analytic",
    seed: int = 0,
    mc_reps: int = 10_000,
    workers: int | None = None,
    existing: CriticalSurface | None = None,
) -> CriticalSurface:
    """Quantile pair q_{a/2}, q_{1-a/2} of the null law on an (H, sigma) grid.

    Node failures are recorded in the node's ``error`` field instead of
    aborting the sweep.  Nodes already present in ``existing`` (same grid
    coordinates) are reused, which gives per-node resume for long sweeps.
    MC-mode node seeds derive from ``(seed, node_index)``, so results do
    not depend on how workers partition the grid.
    """
    if mode not in QUANTILE_MODES:
        raise ValueError(f"mode must be one of {QUANTILE_MODES}, got {mode!r}")
    grid = [(float(h), float(s)) for h in hursts for s in sigmas]
    done = {}
    if existing is not None:
        done = {_node_key(nd.hurst, nd.sigma): nd for nd in existing.nodes if nd.error is None}

    def node_rng(index):
        return np.random.default_rng(
            np.random.SeedSequence(seed, spawn_key=(_MC_STREAM, index))
        )

    pending = [
        (i, h, s) for i, (h, s) in enumerate(grid) if _node_key(h, s) not in done
    ]
    computed = {}
    if workers is not None and workers > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_compute_node, n, k, level, h, s, mode, mc_reps, node_rng(i)): (h, s)
                for i, h, s in pending
            }
            for fut, key in futures.items():
                computed[_node_key(*key)] = fut.result()
    else:
        for i, h, s in pending:
            computed[_node_key(h, s)] = _compute_node(n, k, level, h, s, mode, mc_reps, node_rng(i))

    nodes = tuple(
        done.get(_node_key(h, s)) or computed[_node_key(h, s)] for h, s in grid
    )
    return CriticalSurface(n=n, level=level, k=k, mode=mode, seed=seed, nodes=nodes)


def save_surface(surface: CriticalSurface, csv_path, sidecar_path=None):
    """CSV of the grid plus a JSON sidecar with (n, a, k, mode, seed).

    Floats are written with ``repr`` so a read back is bit-exact.
    """
    csv_path = str(csv_path)
    sidecar_path = sidecar_path or _sidecar_for(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["H", "sigma", "q_lower", "q_upper", "error"])
        for nd in surface.nodes:
            writer.writerow(
                [repr(nd.hurst), repr(nd.sigma), repr(nd.q_lower), repr(nd.q_upper),
                 nd.error or ""]
            )
    with open(sidecar_path, "w") as fh:
        json.dump(surface.meta(), fh, indent=2)
        fh.write("\n")


def load_surface(csv_path, sidecar_path=None) -> CriticalSurface:
    csv_path = str(csv_path)
    sidecar_path = sidecar_path or _sidecar_for(csv_path)
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    nodes = []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            nodes.append(
                SurfaceNode(
                    hurst=float(row["H"]),
                    sigma=float(row["sigma"]),
                    q_lower=float(row["q_lower"]),
                    q_upper=float(row["q_upper"]),
                    error=row.get("error") or None,
                )
            )
    return CriticalSurface(
        n=int(meta["n"]), level=float(meta["a"]), k=int(meta["k"]),
        mode=meta["mode"], seed=int(meta["seed"]), nodes=tuple(nodes),
    )


def _sidecar_for(csv_path):
    return csv_path[: -len(".csv")] + ".json" if csv_path.endswith(".csv") else csv_path + ".json"
