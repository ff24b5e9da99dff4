"""Principal component analysis keeping a target share of variance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError


@dataclass(frozen=True)
class PcaModel:
    """Centering vector, orthonormal components and per-component variance
    ratios (non-increasing)."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) @ self.components

    def inverse_transform(self, reduced: np.ndarray) -> np.ndarray:
        return reduced @ self.components.T + self.mean


def pca_fit_transform(features, target_explained: float) -> tuple[PcaModel, np.ndarray]:
    """Fit PCA and keep the smallest rank reaching ``target_explained``.

    The discarded variance equals the sum of the dropped eigenvalues of the
    sample covariance, so the squared reconstruction error is exactly
    (n - 1) times that sum. Component signs are fixed so that each
    component's largest-magnitude coordinate is positive, which makes the
    decomposition reproducible.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InvalidInputError("PCA needs an n x d matrix with n >= 2")
    if not 0.0 < target_explained <= 1.0:
        raise InvalidInputError("target explained variance must lie in (0, 1]")
    mean = X.mean(axis=0)
    centered = X - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    eigvals = svals**2 / (X.shape[0] - 1)
    total = eigvals.sum()
    if total <= 0.0:
        # all rows identical: a single constant direction explains everything
        ratios = np.zeros(0)
        components = np.zeros((X.shape[1], 0))
        model = PcaModel(mean, components, ratios)
        return model, np.zeros((X.shape[0], 0))
    ratios = eigvals / total
    cumulative = np.cumsum(ratios)
    rank = int(np.searchsorted(cumulative, target_explained - 1e-12) + 1)
    rank = min(rank, int(np.sum(eigvals > 1e-12 * eigvals[0])))
    rank = max(rank, 1)
    components = vt[:rank].T.copy()
    flip = np.sign(components[np.argmax(np.abs(components), axis=0), np.arange(rank)])
    flip[flip == 0.0] = 1.0
    components *= flip
    model = PcaModel(
        mean=mean,
        components=components,
        explained_variance_ratio=ratios[:rank].copy(),
    )
    return model, centered @ components
