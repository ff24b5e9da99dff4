"""Pairwise risk estimators and deviation-bound tolerances.

The complete estimators average the model score over all positive (equal
labels) or negative (different labels) pairs of the sample. The two
incomplete estimators of the negative risk subsample with replacement:

* pair sampling draws B negative pairs uniformly;
* tuple sampling draws B tuples holding one point per class and averages
  the weighted cross-class kernel ``h_S``.

Both subsampled estimators are unbiased for the complete negative risk
conditionally on the data. All sampling is driven by a 64-bit seed and is
bit-reproducible for a fixed (dataset, model, budget, seed).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    Bilinear,
    LabeledDataset,
    MahalanobisDistance,
    SimilarityModel,
    ThresholdIndicator,
    score_pairs,
)
from .exceptions import (
    EmptyClassError,
    InvalidInputError,
    NoNegativePairsError,
    NoPositivePairsError,
)

SCHEME_COMPLETE_POSITIVE = "complete-positive"
SCHEME_COMPLETE_NEGATIVE = "complete-negative"
SCHEME_PAIR_SAMPLED = "pair-sampled"
SCHEME_TUPLE_SAMPLED = "tuple-sampled"


@dataclass(frozen=True)
class RiskEstimate:
    """A risk value with estimator metadata."""

    value: float
    scheme: str
    pairs_used: int
    budget: int | None = None
    seed: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "scheme": self.scheme,
            "pairs_used": self.pairs_used,
            "budget": self.budget,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ToleranceConfig:
    """Constants entering the deviation-bound tolerances.

    ``universal_c`` is the unspecified universal constant of the symmetric
    U-process bound; it defaults to 1 because tolerances are reported, not
    asserted against. ``vc_dim`` is supplied per model family (1 for the
    threshold family, d^2 for matrix-parameterized families).
    """

    vc_dim: int = 1
    kappa: float = 0.25
    universal_c: float = 1.0
    delta: float = 0.05

    def __post_init__(self):
        if self.vc_dim < 1:
            raise InvalidInputError("vc_dim must be a positive integer")
        if not 0.0 < self.kappa < 1.0:
            raise InvalidInputError("kappa must lie in (0, 1)")
        if self.universal_c <= 0.0:
            raise InvalidInputError("universal_c must be positive")
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError("delta must lie in (0, 1)")


def check_kappa(dataset: LabeledDataset, cfg: ToleranceConfig) -> bool:
    """Check kappa <= sum_k p_k^2 <= 1 - kappa on empirical frequencies.

    Emits a warning and returns False when the condition fails.
    """
    p = dataset.class_counts / dataset.n
    p_sq = float(np.sum(p * p))
    ok = cfg.kappa <= p_sq <= 1.0 - cfg.kappa
    if not ok:
        warnings.warn(
            f"kappa={cfg.kappa} does not bracket sum p_k^2={p_sq:.4f}",
            stacklevel=2,
        )
    return ok


def _complete_sums(dataset: LabeledDataset, model: SimilarityModel):
    """(pos_sum, neg_sum) of scores over all pairs i < j."""
    X, y = dataset.features, dataset.labels
    if isinstance(model, Bilinear):
        return _kernels.bilinear_pair_sums(X, y, model.A)
    if isinstance(model, MahalanobisDistance):
        pos_d, neg_d, _, _ = _kernels.mahalanobis_pair_sums(X, y, model.A)
        return pos_d, neg_d
    if isinstance(model, ThresholdIndicator):
        if dataset.dim != 1:
            raise InvalidInputError("threshold family needs scalar features")
        stats = _kernels.pair_stats_upper(X[:, 0])
        same = _kernels.pair_same_label_upper(y).astype(bool)
        hits = stats < model.t
        return float(np.sum(hits & same)), float(np.sum(hits & ~same))
    raise InvalidInputError(f"unknown model type: {type(model).__name__}")


def positive_risk_complete(dataset: LabeledDataset, model: SimilarityModel) -> RiskEstimate:
    """Exact average score over all positive pairs."""
    n_plus = dataset.n_plus
    if n_plus < 1:
        raise NoPositivePairsError("dataset has no positive pair")
    pos_sum, _ = _complete_sums(dataset, model)
    return RiskEstimate(
        value=pos_sum / n_plus,
        scheme=SCHEME_COMPLETE_POSITIVE,
        pairs_used=n_plus,
    )


def negative_risk_complete(dataset: LabeledDataset, model: SimilarityModel) -> RiskEstimate:
    """Exact average score over all negative pairs."""
    n_minus = dataset.n_minus
    if n_minus < 1:
        raise NoNegativePairsError("dataset has no negative pair")
    _, neg_sum = _complete_sums(dataset, model)
    return RiskEstimate(
        value=neg_sum / n_minus,
        scheme=SCHEME_COMPLETE_NEGATIVE,
        pairs_used=n_minus,
    )


def _class_pair_table(dataset: LabeledDataset):
    """All class pairs (k, l), k < l, with weights n_k n_l / n_minus."""
    counts = dataset.class_counts
    ks, ls = np.triu_indices(dataset.n_classes, k=1)
    sizes = counts[ks] * counts[ls]
    keep = sizes > 0
    ks, ls, sizes = ks[keep], ls[keep], sizes[keep]
    return ks, ls, sizes


def _draw_negative_pairs(dataset: LabeledDataset, budget: int, rng: np.random.Generator):
    """Row indices (i, j) of ``budget`` negative pairs, uniform with replacement.

    Drawing a class pair (k, l) with probability n_k n_l / n_minus and then a
    uniform member of each class is distributionally identical to a uniform
    draw from the set of negative pairs, without materializing it.
    """
    ks, ls, sizes = _class_pair_table(dataset)
    probs = sizes / sizes.sum()
    picks = rng.choice(ks.shape[0], size=budget, p=probs)
    counts = dataset.class_counts
    left_member = rng.integers(0, counts[ks[picks]])
    right_member = rng.integers(0, counts[ls[picks]])
    order = np.concatenate(dataset.class_index)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    ii = order[offsets[ks[picks]] + left_member]
    jj = order[offsets[ls[picks]] + right_member]
    return ii.astype(np.int64), jj.astype(np.int64)


def negative_risk_pair_sampled(
    dataset: LabeledDataset,
    model: SimilarityModel,
    budget: int,
    seed: int,
) -> RiskEstimate:
    """Incomplete negative risk from B negative pairs drawn with replacement."""
    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    if dataset.n_minus < 1:
        raise NoNegativePairsError("dataset has no negative pair")
    rng = np.random.default_rng(seed)
    ii, jj = _draw_negative_pairs(dataset, budget, rng)
    scores = score_pairs(model, dataset.features[ii], dataset.features[jj])
    return RiskEstimate(
        value=float(scores.mean()),
        scheme=SCHEME_PAIR_SAMPLED,
        pairs_used=budget,
        budget=budget,
        seed=seed,
    )


def tuple_kernel(xs, model: SimilarityModel, class_counts) -> float:
    """Cross-class kernel: weighted average score over one point per class.

    ``h(x_1, ..., x_K) = (1/n_minus) * sum_{k<l} n_k n_l * S(x_k, x_l)``;
    the weights sum to one.
    """
    counts = np.asarray(class_counts, dtype=np.int64)
    K = counts.shape[0]
    if len(xs) != K:
        raise InvalidInputError(f"expected {K} vectors, one per class, got {len(xs)}")
    if np.any(counts < 1):
        raise EmptyClassError("every class must be nonempty")
    rows = np.asarray([np.asarray(x, dtype=np.float64).ravel() for x in xs])
    ks, ls = np.triu_indices(K, k=1)
    weights = (counts[ks] * counts[ls]).astype(np.float64)
    weights /= weights.sum()
    scores = score_pairs(model, rows[ks], rows[ls])
    return float(weights @ scores)


def _draw_tuples(dataset: LabeledDataset, budget: int, rng: np.random.Generator):
    """(budget, K) row-index matrix: one uniform member per class per tuple."""
    cols = []
    for k in range(dataset.n_classes):
        members = dataset.class_index[k]
        if members.shape[0] == 0:
            raise EmptyClassError(f"class {k + 1} has no member")
        cols.append(members[rng.integers(0, members.shape[0], size=budget)])
    return np.stack(cols, axis=1)


def negative_risk_tuple_sampled(
    dataset: LabeledDataset,
    model: SimilarityModel,
    budget: int,
    seed: int,
) -> RiskEstimate:
    """Incomplete negative risk from B cross-class tuples drawn with replacement."""
    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    tuples = _draw_tuples(dataset, budget, rng)
    K = dataset.n_classes
    counts = dataset.class_counts
    ks, ls = np.triu_indices(K, k=1)
    weights = (counts[ks] * counts[ls]).astype(np.float64)
    weights /= weights.sum()
    total = 0.0
    X = dataset.features
    for idx in range(ks.shape[0]):
        scores = score_pairs(model, X[tuples[:, ks[idx]]], X[tuples[:, ls[idx]]])
        total += weights[idx] * float(scores.sum())
    return RiskEstimate(
        value=total / budget,
        scheme=SCHEME_TUPLE_SAMPLED,
        pairs_used=budget * K * (K - 1) // 2,
        budget=budget,
        seed=seed,
    )


def variance_components(
    dataset: LabeledDataset,
    model: SimilarityModel,
    n_mc: int,
    seed: int,
) -> tuple[float, float]:
    """Monte-Carlo variances (var_h, var_neg_pair) guiding the scheme choice.

    ``var_h`` is the variance of the cross-class kernel over resampled
    tuples; ``var_neg_pair`` the score variance over resampled negative
    pairs. With a pair budget B0, tuple sampling adds roughly
    K(K-1)/(2 B0) * var_h excess variance and pair sampling var_neg_pair/B0,
    so tuple sampling wins when var_neg_pair > K(K-1)/2 * var_h.
    """
    if n_mc < 2:
        raise InvalidInputError("n_mc must be >= 2")
    if dataset.n_minus < 1:
        raise NoNegativePairsError("dataset has no negative pair")
    if np.any(dataset.class_counts < 1):
        raise EmptyClassError("every class must be nonempty")
    rng = np.random.default_rng(seed)
    X = dataset.features
    counts = dataset.class_counts
    K = dataset.n_classes

    tuples = _draw_tuples(dataset, n_mc, rng)
    ks, ls = np.triu_indices(K, k=1)
    weights = (counts[ks] * counts[ls]).astype(np.float64)
    weights /= weights.sum()
    h_vals = np.zeros(n_mc, dtype=np.float64)
    for idx in range(ks.shape[0]):
        h_vals += weights[idx] * score_pairs(
            model, X[tuples[:, ks[idx]]], X[tuples[:, ls[idx]]]
        )
    var_h = float(np.var(h_vals, ddof=1))

    ii, jj = _draw_negative_pairs(dataset, n_mc, rng)
    pair_scores = score_pairs(model, X[ii], X[jj])
    var_neg_pair = float(np.var(pair_scores, ddof=1))
    return var_h, var_neg_pair


def tolerance_slow(n: int, cfg: ToleranceConfig) -> float:
    """Universal-rate tolerance; decreases as O(1/sqrt(n)).

    ``2 C/kappa sqrt(V/n) + 2/kappa (1 + 1/kappa) sqrt(log(3/delta)/(n-1))``
    """
    if n <= 1:
        raise InvalidInputError("n must exceed 1")
    inv_k = 1.0 / cfg.kappa
    term1 = 2.0 * cfg.universal_c * inv_k * math.sqrt(cfg.vc_dim / n)
    term2 = 2.0 * inv_k * (1.0 + inv_k) * math.sqrt(
        math.log(3.0 / cfg.delta) / (n - 1)
    )
    return term1 + term2


def _log1p_product(counts: np.ndarray) -> float:
    """log(1 + prod_k n_k), stable when the product overflows."""
    log_prod = float(np.sum(np.log(counts.astype(np.float64))))
    if log_prod > 700.0:
        return log_prod
    return math.log1p(math.exp(log_prod))


def tolerance_incomplete(class_counts, budget: int, cfg: ToleranceConfig) -> float:
    """Tolerance for the tuple-subsampled problem.

    First two terms depend on the smallest class size N only; the third
    decays as O(sqrt(log n / B)), so a budget B = O(n) preserves the
    complete-estimator rate.
    """
    counts = np.asarray(class_counts, dtype=np.int64)
    if counts.size == 0 or np.any(counts < 1):
        raise EmptyClassError("all class counts must be >= 1")
    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    n_min = int(counts.min())
    term1 = 4.0 * math.sqrt(cfg.vc_dim * math.log(1.0 + n_min) / n_min)
    term2 = math.sqrt(math.log(2.0 / cfg.delta) / n_min)
    term3 = math.sqrt(
        2.0 * (cfg.vc_dim * _log1p_product(counts) + math.log(4.0 / cfg.delta)) / budget
    )
    return term1 + term2 + term3
