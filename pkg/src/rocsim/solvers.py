"""Constrained solvers for the three model families.

* ``solve_bilinear_kkt``: closed-form solution of
  ``min -<P, A>  s.t.  <N, A> <= beta, <A, A> <= 1`` (beta = 2*alpha - 1)
  through the KKT case analysis; the Frobenius norm plays the role of the
  norm dual to the trust-region constraint throughout.
* ``solve_threshold_scan``: exact maximizer of the empirical positive risk
  under the empirical negative-risk constraint over the threshold family,
  by sorting the pair statistics once (O(n^2 log n)).
* ``mmc_projected_gradient``: metric learning that maximizes the average
  negative-pair distance under a unit budget on the average squared
  positive-pair distance and a PSD constraint, optionally with a
  tuple-subsampled negative objective.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import LabeledDataset
from .exceptions import (
    DimensionMismatchError,
    EmptySampleError,
    InfeasibleProblemError,
    InvalidInputError,
    NoNegativePairsError,
    NoPositivePairsError,
    NumericalFailureError,
)
from .risk import _draw_tuples

CASE_ZERO_P = "zero-P"
CASE_COLINEAR = "colinear"
CASE_INTERIOR = "interior"
CASE_BOUNDARY = "boundary"

_EPS = 1e-12


@dataclass(frozen=True)
class KktSolution:
    """Solution of the norm-constrained bilinear problem with multipliers."""

    A: np.ndarray
    lam: float
    gamma: float
    case_tag: str
    beta: float


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    feas_N: float
    feas_norm: float
    cs_lambda: float
    cs_gamma: float

    def max_abs(self) -> float:
        return max(
            self.stationarity,
            self.feas_N,
            self.feas_norm,
            self.cs_lambda,
            self.cs_gamma,
        )


def compute_P_N(dataset: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    """Symmetrized second-moment matrices of positive and negative pairs.

    P = (1/2n_+) sum over equal-label pairs of (x_i x_j^T + x_j x_i^T),
    N likewise over different-label pairs. Evaluated through per-class
    sums, which is algebraically identical to the pair loop.
    """
    n_plus, n_minus = dataset.n_plus, dataset.n_minus
    if n_plus < 1:
        raise NoPositivePairsError("dataset has no positive pair")
    if n_minus < 1:
        raise NoNegativePairsError("dataset has no negative pair")
    X = dataset.features
    total_sum = X.sum(axis=0)
    total_moment = X.T @ X
    pos_acc = np.zeros_like(total_moment)
    for members in dataset.class_index:
        if members.shape[0] < 2:
            continue
        Xk = X[members]
        sk = Xk.sum(axis=0)
        pos_acc += np.outer(sk, sk) - Xk.T @ Xk
    all_acc = np.outer(total_sum, total_sum) - total_moment
    P = pos_acc / (2.0 * n_plus)
    N = (all_acc - pos_acc) / (2.0 * n_minus)
    return P, N


def _frob(M: np.ndarray) -> float:
    return float(np.linalg.norm(M))


def _inner(M1: np.ndarray, M2: np.ndarray) -> float:
    return float(np.sum(M1 * M2))


def kkt_residuals(sol: KktSolution, P: np.ndarray, N: np.ndarray) -> KktResiduals:
    """The five optimality residuals of a candidate solution."""
    if sol.A.shape != P.shape or P.shape != N.shape:
        raise DimensionMismatchError("P, N and A must share one square shape")
    stationarity = _frob(-P + sol.lam * N + 2.0 * sol.gamma * sol.A)
    inner_N = _inner(N, sol.A)
    norm_sq = _inner(sol.A, sol.A)
    return KktResiduals(
        stationarity=stationarity,
        feas_N=max(0.0, inner_N - sol.beta),
        feas_norm=max(0.0, norm_sq - 1.0),
        cs_lambda=abs(sol.lam * (inner_N - sol.beta)),
        cs_gamma=abs(sol.gamma * (norm_sq - 1.0)),
    )


def solve_bilinear_kkt(P: np.ndarray, N: np.ndarray, alpha: float) -> KktSolution:
    """Closed-form solution of the norm-constrained bilinear problem.

    Cases, in the order they are checked:

    * ``zero-P``: P = 0, any feasible point is optimal; the minimum-norm
      representative is returned.
    * ``interior``: <N, P> <= beta ||P||_F, the score constraint is slack at
      A = P / ||P||_F.
    * ``colinear``: N positively proportional to P; the multiplier on N is
      fixed by stationarity and any feasible A with <N, A> = beta works
      (minimum-norm representative returned).
    * ``boundary``: both constraints active; lambda solves a quadratic
      equation when beta != 0 and a linear one otherwise.
    """
    P = np.asarray(P, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    if P.shape != N.shape or P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatchError("P and N must be square with equal shapes")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError("alpha must lie in (0, 1)")
    beta = 2.0 * alpha - 1.0
    norm_P = _frob(P)
    norm_N = _frob(N)
    scale = max(1.0, norm_P, norm_N)

    if beta < -norm_N - _EPS * scale:
        raise InfeasibleProblemError(
            f"beta={beta:.6g} below -||N||_F={-norm_N:.6g}: no feasible matrix"
        )

    if norm_P <= _EPS * scale:
        if beta >= 0.0:
            A = np.zeros_like(P)
        else:
            A = (beta / (norm_N * norm_N)) * N
        return KktSolution(A=A, lam=0.0, gamma=0.0, case_tag=CASE_ZERO_P, beta=beta)

    inner_NP = _inner(N, P)
    if inner_NP <= beta * norm_P + _EPS * scale * scale:
        A = P / norm_P
        return KktSolution(
            A=A, lam=0.0, gamma=norm_P / 2.0, case_tag=CASE_INTERIOR, beta=beta
        )

    # reaching here requires ||N|| > 0, since N = 0 lands in the interior case
    direction_gap = _frob(P / norm_P - N / norm_N)
    if direction_gap <= 1e-9:
        lam = norm_P / norm_N
        A = (beta / (norm_N * norm_N)) * N
        return KktSolution(
            A=A, lam=lam, gamma=0.0, case_tag=CASE_COLINEAR, beta=beta
        )

    norm_N_sq = norm_N * norm_N
    norm_P_sq = norm_P * norm_P
    if beta == 0.0:
        candidates = [inner_NP / norm_N_sq]
    else:
        # (<N,P> - lam ||N||^2)^2 = beta^2 ||P - lam N||^2, expanded in lam
        a = norm_N_sq * (norm_N_sq - beta * beta)
        b = -2.0 * inner_NP * (norm_N_sq - beta * beta)
        c = inner_NP * inner_NP - beta * beta * norm_P_sq
        if abs(a) <= _EPS * scale**4:
            if abs(b) <= _EPS * scale**4:
                candidates = []
            else:
                candidates = [-c / b]
        else:
            disc = b * b - 4.0 * a * c
            if disc < 0.0:
                candidates = []
            else:
                root = math.sqrt(disc)
                candidates = [(-b - root) / (2.0 * a), (-b + root) / (2.0 * a)]

    best = None
    tried = []
    for lam in candidates:
        if lam < -1e-10 * scale:
            continue
        lam = max(lam, 0.0)
        W = P - lam * N
        norm_W = _frob(W)
        if norm_W <= _EPS * scale:
            continue
        gamma = norm_W / 2.0
        A = W / norm_W
        sol = KktSolution(
            A=A, lam=lam, gamma=gamma, case_tag=CASE_BOUNDARY, beta=beta
        )
        res = kkt_residuals(sol, P, N)
        tried.append((lam, res.max_abs()))
        if res.max_abs() <= 1e-8 * scale:
            if best is None or _inner(P, A) > _inner(P, best.A):
                best = sol
    if best is None:
        raise NumericalFailureError(
            "no admissible root of the boundary-case equation",
            diagnostics={"beta": beta, "candidates": tried},
        )
    return best


@dataclass(frozen=True)
class ThresholdScanResult:
    threshold: float
    r_plus: float
    r_minus: float
    degenerate: bool


def threshold_candidates(stats: np.ndarray) -> np.ndarray:
    """Candidate thresholds: midpoints of consecutive distinct pair statistics
    extended by the sentinels 0 below the minimum and 1 above the maximum,
    plus the endpoints 0 and 1 themselves."""
    uniq = np.unique(stats)
    extended = np.concatenate(([0.0], uniq, [1.0]))
    mids = 0.5 * (extended[:-1] + extended[1:])
    return np.unique(np.concatenate(([0.0], mids, [1.0])))


def solve_threshold_scan(dataset: LabeledDataset, alpha: float) -> ThresholdScanResult:
    """Best threshold of the corner-squares family at level ``alpha``.

    Sorts the pair statistics once, then reads each candidate's empirical
    risks off cumulative counts. Returns the feasible candidate with the
    largest empirical positive risk, ties broken by the smallest
    threshold; when only the empty set is feasible the result is flagged
    degenerate with threshold 0.
    """
    if dataset.n < 2:
        raise EmptySampleError("threshold scan needs at least two points")
    if dataset.dim != 1:
        raise InvalidInputError("threshold family needs scalar features")
    n_plus, n_minus = dataset.n_plus, dataset.n_minus
    if n_plus < 1:
        raise NoPositivePairsError("dataset has no positive pair")
    if n_minus < 1:
        raise NoNegativePairsError("dataset has no negative pair")
    x = dataset.features[:, 0]
    if x.min() < 0.0 or x.max() > 1.0:
        raise InvalidInputError("threshold family needs features in [0, 1]")
    stats = _kernels.pair_stats_upper(x)
    same = _kernels.pair_same_label_upper(dataset.labels).astype(bool)

    order = np.argsort(stats, kind="stable")
    sorted_stats = stats[order]
    sorted_pos = same[order].astype(np.int64)
    cum_pos = np.concatenate(([0], np.cumsum(sorted_pos)))
    cum_all = np.arange(sorted_stats.shape[0] + 1)

    cands = threshold_candidates(stats)
    # pairs counted by a candidate t are exactly those with statistic < t
    included = np.searchsorted(sorted_stats, cands, side="left")
    pos_counts = cum_pos[included]
    neg_counts = cum_all[included] - pos_counts
    r_plus = pos_counts / n_plus
    r_minus = neg_counts / n_minus

    feasible = r_minus <= alpha
    if not np.any(feasible):
        return ThresholdScanResult(0.0, 0.0, 0.0, True)
    best_rp = r_plus[feasible].max()
    winners = feasible & (r_plus == best_rp)
    idx = int(np.flatnonzero(winners)[0])
    degenerate = best_rp == 0.0
    t_hat = 0.0 if degenerate else float(cands[idx])
    if degenerate:
        return ThresholdScanResult(0.0, 0.0, 0.0, True)
    return ThresholdScanResult(
        t_hat, float(r_plus[idx]), float(r_minus[idx]), False
    )


def psd_project(M: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: symmetrize, then clip eigenvalues at 0."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError("input must be a square matrix")
    sym = 0.5 * (M + M.T)
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    clipped = np.maximum(vals, 0.0)
    return (vecs * clipped) @ vecs.T


@dataclass(frozen=True)
class MmcConfig:
    """Projected-gradient settings for the metric-learning solver.

    Defaults (step size 1e-2 with halving on objective decrease, 2000
    iterations, 1e-6 relative tolerance) are artifact choices and are
    recorded in experiment metadata.
    """

    step_size: float = 1e-2
    max_iters: int = 2000
    tol: float = 1e-6
    tuple_budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0.0:
            raise InvalidInputError("step_size must be positive")
        if self.tol <= 0.0:
            raise InvalidInputError("tol must be positive")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if self.tuple_budget is not None and self.tuple_budget < 1:
            raise InvalidInputError("tuple_budget must be >= 1 when set")


@dataclass
class MmcResult:
    A: np.ndarray
    objective: float
    constraint: float
    converged: bool
    n_iterations: int
    pairs_per_iteration: int
    trace: list = field(default_factory=list)
    iterates: list | None = None

    def trace_rows(self):
        """Rows (iteration, objective, constraint, step_size)."""
        return list(self.trace)


def positive_scatter(dataset: LabeledDataset) -> np.ndarray:
    """(1/n_+) sum over equal-label pairs of (x_i - x_j)(x_i - x_j)^T."""
    n_plus = dataset.n_plus
    if n_plus < 1:
        raise NoPositivePairsError("dataset has no positive pair")
    X = dataset.features
    acc = np.zeros((dataset.dim, dataset.dim))
    for members in dataset.class_index:
        if members.shape[0] < 2:
            continue
        Xk = X[members]
        sk = Xk.sum(axis=0)
        acc += members.shape[0] * (Xk.T @ Xk) - np.outer(sk, sk)
    return acc / n_plus


def _feasibility_projection(A, constraint_matrix, max_rounds=20):
    """Alternate the exact homogeneous rescale and the PSD projection.

    The squared-distance constraint is linear in A, so dividing A by its
    constraint value lands exactly on the constraint surface; the PSD
    projection can push the value back up, hence the short alternation.
    """
    for _ in range(max_rounds):
        value = _inner(A, constraint_matrix)
        if value > 1.0:
            A = A / value
        A = psd_project(A)
        if _inner(A, constraint_matrix) <= 1.0 + 1e-12:
            break
    return A


def mmc_projected_gradient(
    dataset: LabeledDataset,
    config: MmcConfig,
    init: np.ndarray | None = None,
    keep_iterates: bool = False,
) -> MmcResult:
    """Maximize the average negative-pair distance under the positive budget.

    When ``config.tuple_budget`` is set the negative objective is replaced
    by its tuple-sampled incomplete version, resampled once per run from
    ``config.seed``. Initialization defaults to the identity rescaled onto
    the constraint surface. Returns the best feasible iterate; the
    ``converged`` flag reports whether the relative objective change fell
    below ``tol`` before ``max_iters``.
    """
    n_minus = dataset.n_minus
    if dataset.n_plus < 1:
        raise NoPositivePairsError("dataset has no positive pair")
    if n_minus < 1:
        raise NoNegativePairsError("dataset has no negative pair")
    X, y = dataset.features, dataset.labels
    d = dataset.dim
    constraint_matrix = positive_scatter(dataset)

    sample = None
    if config.tuple_budget is None:
        pairs_per_iter = n_minus
    else:
        rng = np.random.default_rng(config.seed)
        tuples = _draw_tuples(dataset, config.tuple_budget, rng)
        K = dataset.n_classes
        ks, ls = np.triu_indices(K, k=1)
        counts = dataset.class_counts
        ii = tuples[:, ks].ravel()
        jj = tuples[:, ls].ravel()
        w = np.repeat(
            (counts[ks] * counts[ls]).astype(np.float64)[None, :],
            config.tuple_budget,
            axis=0,
        ).ravel()
        w /= float(n_minus) * config.tuple_budget
        sample = (ii, jj, w)
        pairs_per_iter = config.tuple_budget * K * (K - 1) // 2

    def objective_and_grad(A):
        if sample is None:
            total, grad = _kernels.mmc_negative_gradient(X, y, A)
            return total / n_minus, grad / n_minus
        return _kernels.weighted_pairs_gradient(X, sample[0], sample[1], sample[2], A)

    def objective_only(A):
        if sample is None:
            _, neg_d, _, _ = _kernels.mahalanobis_pair_sums(X, y, A)
            return neg_d / n_minus
        ii, jj, w = sample
        diffs = X[ii] - X[jj]
        sq = np.maximum(np.einsum("bi,ij,bj->b", diffs, A, diffs), 0.0)
        return float(w @ np.sqrt(sq))

    if init is None:
        eye_value = _inner(np.eye(d), constraint_matrix)
        A = np.eye(d) / eye_value if eye_value > 1.0 else np.eye(d)
    else:
        A = _feasibility_projection(np.asarray(init, dtype=np.float64), constraint_matrix)

    obj = objective_only(A)
    best_A, best_obj = A.copy(), obj
    step = config.step_size
    trace = [(0, obj, _inner(A, constraint_matrix), step)]
    iterates = [A.copy()] if keep_iterates else None
    converged = False
    iteration = 0
    grad_scale = None
    for iteration in range(1, config.max_iters + 1):
        _, grad = objective_and_grad(A)
        if grad_scale is None:
            norm_g = float(np.linalg.norm(grad))
            grad_scale = 1.0 / norm_g if norm_g > 0 else 0.0
            if grad_scale == 0.0:
                converged = True
                break
        accepted = False
        for _ in range(40):
            trial = _feasibility_projection(
                A + step * grad_scale * grad, constraint_matrix
            )
            trial_obj = objective_only(trial)
            if trial_obj >= obj:
                accepted = True
                break
            step *= 0.5
            if step < 1e-14:
                break
        if not accepted:
            converged = True
            break
        gain = trial_obj - obj
        A, obj = trial, trial_obj
        step = min(step * 1.2, 10.0 * config.step_size)
        if obj > best_obj:
            best_A, best_obj = A.copy(), obj
        trace.append((iteration, obj, _inner(A, constraint_matrix), step))
        if iterates is not None:
            iterates.append(A.copy())
        if gain <= config.tol * max(abs(obj), 1.0):
            converged = True
            break

    return MmcResult(
        A=best_A,
        objective=best_obj,
        constraint=_inner(best_A, constraint_matrix),
        converged=converged,
        n_iterations=iteration,
        pairs_per_iteration=pairs_per_iter,
        trace=trace,
        iterates=iterates,
    )
