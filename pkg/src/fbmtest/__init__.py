"""Exact ACVF-based hypothesis testing for FBM observed with additive noise.

The package provides:

* closed-form covariance structure of noisy-FBM and SBM increments
  (:mod:`fbmtest.models`),
* exact simulators with reproducible parallel streams
  (:mod:`fbmtest.simulate`),
* the generalized chi-squared null law of the sample-ACVF statistic
  (:mod:`fbmtest.gchi2`),
* the two-sided test and critical surfaces (:mod:`fbmtest.htest`),
* Monte Carlo power studies (:mod:`fbmtest.power`),
* a CLI with CSV + figure reports (:mod:`fbmtest.cli`).
"""

from .gchi2 import (
    GChi2Law,
    NumericalError,
    QFWeights,
    acvf_statistic,
    build_qf_matrix,
    empirical_chf,
    null_weights,
)
from .htest import (
    AcvfTest,
    CriticalSurface,
    TestConfig,
    TestOutcome,
    build_critical_surface,
    load_surface,
    run_test,
    save_surface,
)
from .models import (
    ModelSpec,
    SbmSpec,
    covariance_matrix,
    fgn_acvf,
    noisy_increment_acvf,
    sbm_increment_cov,
)
from .power import (
    PowerCurve,
    PowerStudyConfig,
    estimate_power,
    lag_comparison,
    save_power_curve,
)
from .simulate import (
    EmbeddingError,
    FgnSampler,
    NoisyFbmSampler,
    SbmSampler,
    SimConfig,
    replication_stream,
    simulate_fgn,
    simulate_noisy_fbm_increments,
    simulate_sbm_increments,
)

__version__ = "0.1.0"
