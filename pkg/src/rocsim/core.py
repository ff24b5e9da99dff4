"""Datasets, similarity/distance model families and pairwise labels.

A sample is a feature matrix with integer class labels in ``{1..K}``. Pairs of
observations carry the binary label ``z = +1`` when the two class labels
agree and ``z = -1`` otherwise; the positive/negative pair counts ``n_plus``
and ``n_minus`` always satisfy ``n_plus + n_minus = n(n-1)/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    EmptySampleError,
    InvalidInputError,
)

PSD_EIG_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with class labels, class counts and class indices.

    Labels are 1-based (values in ``{1..K}``); row indices are 0-based.
    All arrays are read-only after construction, so instances are safe to
    share across workers.
    """

    features: np.ndarray
    labels: np.ndarray
    class_counts: np.ndarray = field(init=False)
    class_index: tuple = field(init=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise InvalidInputError("features must be a 2-D matrix")
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if labels.shape[0] != features.shape[0]:
            raise InvalidInputError(
                f"{labels.shape[0]} labels for {features.shape[0]} rows"
            )
        if labels.size == 0:
            raise EmptySampleError("dataset must contain at least one point")
        if labels.min() < 1:
            raise InvalidInputError("labels must be integers in {1..K}")
        object.__setattr__(self, "features", _readonly(features))
        object.__setattr__(self, "labels", _readonly(labels))
        counts = np.bincount(labels, minlength=int(labels.max()) + 1)[1:]
        object.__setattr__(self, "class_counts", _readonly(counts))
        index = tuple(
            _readonly(np.flatnonzero(labels == k + 1)) for k in range(counts.size)
        )
        object.__setattr__(self, "class_index", index)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return self.class_counts.shape[0]

    @property
    def n_plus(self) -> int:
        c = self.class_counts.astype(object)
        return int((c * (c - 1) // 2).sum())

    @property
    def n_minus(self) -> int:
        return self.n * (self.n - 1) // 2 - self.n_plus

    def subset(self, rows) -> "LabeledDataset":
        """New dataset restricted to the given row indices (order kept)."""
        return LabeledDataset(self.features[rows], self.labels[rows])


def pair_counts(dataset: LabeledDataset) -> tuple[int, int]:
    """Number of positive and negative pairs ``(n_plus, n_minus)``."""
    if dataset.n < 2:
        raise EmptySampleError("pair counts need at least two points")
    return dataset.n_plus, dataset.n_minus


def pair_label(y: int, y_prime: int) -> int:
    """Binary pair label ``z = 2*I{y == y'} - 1``."""
    return 1 if y == y_prime else -1


@dataclass(frozen=True)
class Bilinear:
    """Similarity ``(x, x') -> (1 + x^T A x') / 2``.

    Scores lie in [0, 1] whenever inputs are unit-norm and ``||A||_F <= 1``.
    ``A`` need not be symmetric; the solvers produce symmetric matrices and
    check symmetry rather than forcing it.
    """

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidInputError("bilinear matrix must be square")
        object.__setattr__(self, "A", _readonly(A))

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class ThresholdIndicator:
    """Indicator of the corner-squares region on the unit interval.

    The score of a scalar pair (x, x') is 1 when
    ``min(max(1-x, 1-x'), max(x, x')) < t`` and 0 otherwise.
    """

    t: float

    def __post_init__(self):
        t = float(self.t)
        if not 0.0 <= t <= 1.0:
            raise InvalidInputError("threshold must lie in [0, 1]")
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class MahalanobisDistance:
    """Distance ``(x, x') -> sqrt((x - x')^T A (x - x'))`` with A PSD."""

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidInputError("metric matrix must be square")
        if not np.allclose(A, A.T, atol=1e-8, rtol=0.0):
            raise InvalidInputError("metric matrix must be symmetric")
        if A.shape[0] and np.linalg.eigvalsh(A).min() < -PSD_EIG_TOL:
            raise InvalidInputError(
                f"metric matrix must be PSD (min eigenvalue below -{PSD_EIG_TOL})"
            )
        object.__setattr__(self, "A", _readonly(A))

    @property
    def dim(self) -> int:
        return self.A.shape[0]


SimilarityModel = Bilinear | ThresholdIndicator | MahalanobisDistance


def threshold_pair_stat(x, x_prime):
    """Pair statistic ``min(max(1-x, 1-x'), max(x, x'))`` on [0, 1] inputs."""
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    if np.any(x < 0) or np.any(x > 1) or np.any(x_prime < 0) or np.any(x_prime > 1):
        raise InvalidInputError("threshold-family inputs must lie in [0, 1]")
    return np.minimum(
        np.maximum(1.0 - x, 1.0 - x_prime), np.maximum(x, x_prime)
    )


def _as_vector(x, dim: int) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).ravel()
    if v.shape[0] != dim:
        raise DimensionMismatchError(
            f"expected a vector of dimension {dim}, got {v.shape[0]}"
        )
    return v


def score(model: SimilarityModel, x, x_prime) -> float:
    """Similarity or distance score of a single pair under ``model``."""
    if isinstance(model, Bilinear):
        u = _as_vector(x, model.dim)
        v = _as_vector(x_prime, model.dim)
        return float(0.5 * (1.0 + u @ model.A @ v))
    if isinstance(model, ThresholdIndicator):
        u = np.asarray(x, dtype=np.float64).ravel()
        v = np.asarray(x_prime, dtype=np.float64).ravel()
        if u.size != 1 or v.size != 1:
            raise DimensionMismatchError("threshold-family inputs must be scalar")
        stat = threshold_pair_stat(u[0], v[0])
        return float(stat < model.t)
    if isinstance(model, MahalanobisDistance):
        u = _as_vector(x, model.dim)
        v = _as_vector(x_prime, model.dim)
        diff = u - v
        return float(np.sqrt(max(diff @ model.A @ diff, 0.0)))
    raise InvalidInputError(f"unknown model type: {type(model).__name__}")


def score_pairs(model: SimilarityModel, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Vectorized scores for the row pairs ``(left[i], right[i])``."""
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.ndim == 1:
        left = left.reshape(-1, 1)
    if right.ndim == 1:
        right = right.reshape(-1, 1)
    if left.shape != right.shape:
        raise DimensionMismatchError("pair batches must have matching shapes")
    if isinstance(model, Bilinear):
        if left.shape[1] != model.dim:
            raise DimensionMismatchError(
                f"model dimension {model.dim}, features {left.shape[1]}"
            )
        return 0.5 * (1.0 + np.einsum("bi,ij,bj->b", left, model.A, right))
    if isinstance(model, ThresholdIndicator):
        if left.shape[1] != 1:
            raise DimensionMismatchError("threshold-family inputs must be scalar")
        stat = threshold_pair_stat(left[:, 0], right[:, 0])
        return (stat < model.t).astype(np.float64)
    if isinstance(model, MahalanobisDistance):
        if left.shape[1] != model.dim:
            raise DimensionMismatchError(
                f"model dimension {model.dim}, features {left.shape[1]}"
            )
        diff = left - right
        sq = np.einsum("bi,ij,bj->b", diff, model.A, diff)
        return np.sqrt(np.maximum(sq, 0.0))
    raise InvalidInputError(f"unknown model type: {type(model).__name__}")
