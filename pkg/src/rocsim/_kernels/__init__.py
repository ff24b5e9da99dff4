"""Hot pairwise kernels with a compiled core and a pure-Python fallback.

At import time the package picks the Cython extension when it was built,
otherwise the numpy fallback. Set ``ROCSIM_PURE_PYTHON=1`` to force the
fallback (used by the cross-backend tests and the benchmark).
``BACKEND`` names the active implementation.
"""
import os

_FORCE_PYTHON = os.environ.get("ROCSIM_PURE_PYTHON", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

if _FORCE_PYTHON:
    from . import fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        from . import fallback as _impl

        BACKEND = "python"

pair_stats_upper = _impl.pair_stats_upper
pair_same_label_upper = _impl.pair_same_label_upper
bilinear_pair_sums = _impl.bilinear_pair_sums
mahalanobis_pair_sums = _impl.mahalanobis_pair_sums
mmc_negative_gradient = _impl.mmc_negative_gradient
weighted_pairs_gradient = _impl.weighted_pairs_gradient

__all__ = [
    "BACKEND",
    "pair_stats_upper",
    "pair_same_label_upper",
    "bilinear_pair_sums",
    "mahalanobis_pair_sums",
    "mmc_negative_gradient",
    "weighted_pairs_gradient",
]
