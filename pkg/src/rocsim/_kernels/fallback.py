"""Pure-numpy implementations of the pairwise hot kernels.

Drop-in replacements for the compiled extension: same signatures, same
lexicographic pair order (i < j, row-major). The O(n^2) passes run in fixed
512-row chunks so accumulation order, and therefore the floating-point
result, never depends on array size or worker count.
"""
import numpy as np

_CHUNK = 512


def _as_matrix(X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X


def pair_stats_upper(x):
    """Threshold pair statistic for every pair i < j, flattened."""
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    n = x.shape[0]
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    pos = 0
    for i in range(n - 1):
        tail = x[i + 1 :]
        seg = np.minimum(
            np.maximum(1.0 - x[i], 1.0 - tail), np.maximum(x[i], tail)
        )
        out[pos : pos + seg.shape[0]] = seg
        pos += seg.shape[0]
    return out


def pair_same_label_upper(y):
    """Same-label mask for every pair i < j, flattened (uint8)."""
    y = np.ascontiguousarray(y, dtype=np.int64).ravel()
    n = y.shape[0]
    out = np.empty(n * (n - 1) // 2, dtype=np.uint8)
    pos = 0
    for i in range(n - 1):
        seg = y[i + 1 :] == y[i]
        out[pos : pos + seg.shape[0]] = seg
        pos += seg.shape[0]
    return out


def _chunk_masks(y, start, stop):
    n = y.shape[0]
    rows = np.arange(start, stop)[:, None]
    upper = np.arange(n)[None, :] > rows
    same = y[start:stop, None] == y[None, :]
    return upper & same, upper & ~same


def bilinear_pair_sums(X, y, A):
    """Sums of (1 + x_i^T A x_j)/2 over pairs i < j, split by label equality."""
    X = _as_matrix(X)
    y = np.ascontiguousarray(y, dtype=np.int64).ravel()
    A = np.ascontiguousarray(A, dtype=np.float64)
    n = y.shape[0]
    G = X @ A
    pos_sum = 0.0
    neg_sum = 0.0
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        scores = 0.5 * (1.0 + G[start:stop] @ X.T)
        pos_mask, neg_mask = _chunk_masks(y, start, stop)
        pos_sum += float(scores[pos_mask].sum())
        neg_sum += float(scores[neg_mask].sum())
    return pos_sum, neg_sum


def mahalanobis_pair_sums(X, y, A):
    """Distance and squared-distance sums over pairs i < j, split by label.

    Returns (pos_dist, neg_dist, pos_sq, neg_sq). ``A`` must be symmetric.
    """
    X = _as_matrix(X)
    y = np.ascontiguousarray(y, dtype=np.int64).ravel()
    A = np.ascontiguousarray(A, dtype=np.float64)
    n = y.shape[0]
    G = X @ A
    q = np.einsum("ij,ij->i", X, G)
    pos_d = neg_d = pos_sq = neg_sq = 0.0
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        sq = q[start:stop, None] + q[None, :] - 2.0 * (G[start:stop] @ X.T)
        np.maximum(sq, 0.0, out=sq)
        dist = np.sqrt(sq)
        pos_mask, neg_mask = _chunk_masks(y, start, stop)
        pos_d += float(dist[pos_mask].sum())
        neg_d += float(dist[neg_mask].sum())
        pos_sq += float(sq[pos_mask].sum())
        neg_sq += float(sq[neg_mask].sum())
    return pos_d, neg_d, pos_sq, neg_sq


def mmc_negative_gradient(X, y, A):
    """Negative-pair distance sum and subgradient of that sum w.r.t. A.

    The subgradient of d_A at a pair with distance d > 0 is
    (x-x')(x-x')^T / (2d); pairs at distance 0 contribute 0.
    Returns (neg_dist_sum, grad) with grad a (d, d) symmetric matrix.
    """
    X = _as_matrix(X)
    y = np.ascontiguousarray(y, dtype=np.int64).ravel()
    A = np.ascontiguousarray(A, dtype=np.float64)
    n, d = X.shape
    G = X @ A
    q = np.einsum("ij,ij->i", X, G)
    neg_sum = 0.0
    grad = np.zeros((d, d), dtype=np.float64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        sq = q[start:stop, None] + q[None, :] - 2.0 * (G[start:stop] @ X.T)
        np.maximum(sq, 0.0, out=sq)
        dist = np.sqrt(sq)
        _, neg_mask = _chunk_masks(y, start, stop)
        neg_sum += float(dist[neg_mask].sum())
        with np.errstate(divide="ignore"):
            w = np.where(neg_mask & (dist > 0.0), 0.5 / dist, 0.0)
        Xc = X[start:stop]
        row_w = w.sum(axis=1)
        col_w = w.sum(axis=0)
        cross = Xc.T @ w @ X
        grad += Xc.T @ (row_w[:, None] * Xc)
        grad += X.T @ (col_w[:, None] * X)
        grad -= cross + cross.T
    return neg_sum, grad


def weighted_pairs_gradient(X, ii, jj, w, A):
    """Weighted distance sum and subgradient over explicit index pairs.

    Computes sum_b w_b * d_A(X[ii_b], X[jj_b]) and its subgradient
    sum_b w_b * u_b u_b^T / (2 d_b) with u_b the pair difference.
    """
    X = _as_matrix(X)
    A = np.ascontiguousarray(A, dtype=np.float64)
    ii = np.ascontiguousarray(ii, dtype=np.int64)
    jj = np.ascontiguousarray(jj, dtype=np.int64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    diffs = X[ii] - X[jj]
    sq = np.einsum("bi,ij,bj->b", diffs, A, diffs)
    np.maximum(sq, 0.0, out=sq)
    dist = np.sqrt(sq)
    obj = float(w @ dist)
    with np.errstate(divide="ignore"):
        coef = np.where(dist > 0.0, 0.5 * w / dist, 0.0)
    grad = (diffs * coef[:, None]).T @ diffs
    return obj, grad
