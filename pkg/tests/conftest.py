import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rocsim.core import LabeledDataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_dataset(rng, n, n_classes, dim, unit_sphere=False):
    """Random dataset guaranteed to contain both pair types."""
    while True:
        labels = rng.integers(1, n_classes + 1, size=n)
        if np.unique(labels).size >= 2 and np.any(np.bincount(labels)[1:] >= 2):
            break
    features = rng.normal(size=(n, dim))
    if unit_sphere:
        features /= np.linalg.norm(features, axis=1, keepdims=True)
    return LabeledDataset(features, labels)
