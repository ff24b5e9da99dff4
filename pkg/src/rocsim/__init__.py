"""Supervised similarity learning by pointwise ROC optimization.

Pairwise positive/negative risks as complete or subsampled U-statistics,
constrained solvers for three model families (norm-constrained bilinear
similarities, threshold indicators on the unit interval, Mahalanobis
distances) and seeded synthetic studies of learning rates and sampling
trade-offs.
"""

__version__ = "0.1.0"

from .core import (
    Bilinear,
    LabeledDataset,
    MahalanobisDistance,
    ThresholdIndicator,
    pair_counts,
    pair_label,
    score,
    score_pairs,
)
from .evaluation import RateFit, RocCurve, empirical_quantile, empirical_roc, fit_rate, roc_at
from .risk import (
    RiskEstimate,
    ToleranceConfig,
    negative_risk_complete,
    negative_risk_pair_sampled,
    negative_risk_tuple_sampled,
    positive_risk_complete,
    tolerance_incomplete,
    tolerance_slow,
    tuple_kernel,
    variance_components,
)
from .solvers import (
    KktSolution,
    MmcConfig,
    MmcResult,
    ThresholdScanResult,
    compute_P_N,
    kkt_residuals,
    mmc_projected_gradient,
    psd_project,
    solve_bilinear_kkt,
    solve_threshold_scan,
)
from .synth import (
    FastRatesParams,
    SphereParams,
    analytic_risks_threshold,
    check_quantile_condition,
    eta_pair,
    fast_rates_C,
    mu1,
    noise_distribution,
    optimal_roc,
    pair_statistic,
    sample_fast_rates,
    sample_sphere,
)

__all__ = [name for name in dir() if not name.startswith("_")]
