"""ROC curves, empirical quantiles and the learning-rate regression."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError


@dataclass(frozen=True)
class RocCurve:
    """Piecewise-linear ROC curve through (0, 0) and (1, 1).

    Stored abscissae are strictly increasing; where the exact step curve
    jumps vertically the stored point keeps the largest true positive rate
    reached at that false positive rate, and linear interpolation connects
    consecutive stored points.
    """

    fpr: np.ndarray
    tpr: np.ndarray

    def __post_init__(self):
        fpr = np.asarray(self.fpr, dtype=np.float64)
        tpr = np.asarray(self.tpr, dtype=np.float64)
        if fpr.shape != tpr.shape or fpr.ndim != 1 or fpr.shape[0] < 2:
            raise InvalidInputError("curve needs matching 1-D point arrays")
        if np.any(np.diff(fpr) <= 0.0):
            raise InvalidInputError("fpr values must be strictly increasing")
        if np.any(np.diff(tpr) < 0.0):
            raise InvalidInputError("tpr values must be non-decreasing")
        if fpr[0] != 0.0 or fpr[-1] != 1.0:
            raise InvalidInputError("curve must span fpr 0 to 1")
        fpr.setflags(write=False)
        tpr.setflags(write=False)
        object.__setattr__(self, "fpr", fpr)
        object.__setattr__(self, "tpr", tpr)

    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def empirical_roc(scores, pair_labels) -> RocCurve:
    """Empirical ROC of pair scores against their binary pair labels.

    The survival functions use a strict inequality, so each distinct score
    value contributes the point (share of negatives above it, share of
    positives above it); (0, 0) and (1, 1) close the curve.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    z = np.asarray(pair_labels, dtype=np.int64).ravel()
    if scores.shape != z.shape:
        raise InvalidInputError("scores and labels must align")
    if not np.all(np.isin(z, (-1, 1))):
        raise InvalidInputError("pair labels must be +1 or -1")
    n_pos = int(np.sum(z == 1))
    n_neg = int(np.sum(z == -1))
    if n_pos == 0 or n_neg == 0:
        raise InvalidInputError("need at least one positive and one negative pair")

    order = np.argsort(-scores, kind="stable")
    sorted_z = z[order]
    sorted_scores = scores[order]
    pos_cum = np.cumsum(sorted_z == 1)
    neg_cum = np.cumsum(sorted_z == -1)
    # thresholds at each distinct value: counts of strictly larger scores
    distinct_last = np.flatnonzero(
        np.diff(np.concatenate((sorted_scores, [-np.inf]))) != 0.0
    )
    fpr = neg_cum[distinct_last] / n_neg
    tpr = pos_cum[distinct_last] / n_pos
    fpr = np.concatenate(([0.0], fpr, [1.0]))
    tpr = np.concatenate(([0.0], tpr, [1.0]))
    # collapse vertical runs: keep the largest tpr reached per fpr value
    keep_fpr = []
    keep_tpr = []
    for f, t in zip(fpr, tpr):
        if keep_fpr and keep_fpr[-1] == f:
            keep_tpr[-1] = max(keep_tpr[-1], t)
        else:
            keep_fpr.append(f)
            keep_tpr.append(t)
    return RocCurve(np.array(keep_fpr), np.array(keep_tpr))


def roc_at(curve: RocCurve, alpha: float) -> float:
    """Linear-interpolation read of the curve at false positive rate alpha."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError("alpha must lie in [0, 1]")
    return float(np.interp(alpha, curve.fpr, curve.tpr))


def empirical_quantile(values, q: float) -> float:
    """Lower empirical quantile: order statistic at index ceil(q * n)."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise InvalidInputError("quantile of an empty sample")
    if not 0.0 < q < 1.0:
        raise InvalidInputError("q must lie in (0, 1)")
    ordered = np.sort(values)
    rank = int(np.ceil(q * ordered.size))
    return float(ordered[max(rank, 1) - 1])


@dataclass(frozen=True)
class RateFit:
    """Log-log regression summary: quantile ~ exp(intercept) * n^exponent."""

    exponent: float
    intercept: float
    r_squared: float


def fit_rate(ns, quantiles) -> RateFit:
    """Ordinary least squares of log(quantile) on log(n)."""
    ns = np.asarray(ns, dtype=np.float64).ravel()
    quantiles = np.asarray(quantiles, dtype=np.float64).ravel()
    if ns.shape != quantiles.shape or ns.size < 2:
        raise InvalidInputError("need at least two (n, quantile) points")
    if np.any(quantiles <= 0.0):
        raise InvalidInputError("quantiles must be positive to take logs")
    if np.any(ns <= 0.0):
        raise InvalidInputError("sample sizes must be positive")
    log_n = np.log(ns)
    log_q = np.log(quantiles)
    design = np.stack([log_n, np.ones_like(log_n)], axis=1)
    coef, *_ = np.linalg.lstsq(design, log_q, rcond=None)
    fitted = design @ coef
    ss_res = float(np.sum((log_q - fitted) ** 2))
    ss_tot = float(np.sum((log_q - log_q.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(exponent=float(coef[0]), intercept=float(coef[1]), r_squared=r_squared)
