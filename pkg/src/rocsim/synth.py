"""Synthetic problems with known analytic structure.

Two generators:

* a 3-class problem on the unit sphere where each class is uniform on a
  spherical cap of half-angle pi/4 around its centroid;
* a two-class problem on [0, 1] with uniform marginal, built so that the
  pairwise posterior crosses its optimal decision threshold 1/2 with a
  tunable margin exponent ``a``, which makes empirical learning-rate
  studies possible. Positive and negative risks of every corner-squares
  threshold rule are available in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .core import LabeledDataset, threshold_pair_stat
from .exceptions import InvalidInputError, NumericalFailureError, ParameterDomainError

QUAD_ABS_TOL = 1e-12


@dataclass(frozen=True)
class SphereParams:
    """Three spherical-cap classes with equal weights.

    Centroids: c1 = (cos pi/3, sin pi/3, 0), c2 = e2, c3 = e3; all caps
    share the half-angle pi/4 and the within-cap density is uniform with
    respect to surface measure.
    """

    cap_half_angle: float = math.pi / 4
    centroids: np.ndarray = field(init=False)
    class_probs: tuple = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

    def __post_init__(self):
        if not 0.0 < self.cap_half_angle < math.pi / 2:
            raise InvalidInputError("cap half-angle must lie in (0, pi/2)")
        c = np.array(
            [
                [math.cos(math.pi / 3), math.sin(math.pi / 3), 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    def to_json_dict(self) -> dict:
        return {
            "centroids": self.centroids.tolist(),
            "cap_half_angle": self.cap_half_angle,
            "class_probs": list(self.class_probs),
        }


def _cap_frame(centroid: np.ndarray) -> np.ndarray:
    """Orthonormal basis (u, v, centroid) used to rotate pole samples."""
    pick = np.eye(3)[np.argmin(np.abs(centroid))]
    u = np.cross(centroid, pick)
    u /= np.linalg.norm(u)
    v = np.cross(centroid, u)
    return np.stack([u, v, centroid], axis=1)


def sample_sphere(params: SphereParams, n: int, seed: int) -> LabeledDataset:
    """n points uniform on the cap of their uniformly drawn class."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    labels = rng.integers(1, 4, size=n)
    cos_min = math.cos(params.cap_half_angle)
    cos_theta = rng.uniform(cos_min, 1.0, size=n)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    sin_theta = np.sqrt(1.0 - cos_theta**2)
    local = np.stack(
        [sin_theta * np.cos(phi), sin_theta * np.sin(phi), cos_theta], axis=1
    )
    features = np.empty((n, 3))
    for k in range(3):
        mask = labels == k + 1
        frame = _cap_frame(params.centroids[k])
        features[mask] = local[mask] @ frame.T
    return LabeledDataset(features, labels)


def fast_rates_C(alpha: float, m: float, a: float) -> float:
    """Plateau half-height making 1/2 the optimal decision threshold.

    ``C = 1/2 - sqrt(1 - 2 alpha)/(4m) + a (1 - 2m)^(1/a) / (4m)``; raises
    when (alpha, m, a) leave the validity region 0 < C < 1/2.
    """
    if not 0.0 < alpha < 0.5:
        raise ParameterDomainError("alpha must lie in (0, 1/2)")
    if not 0.0 < m < 0.5:
        raise ParameterDomainError("m must lie in (0, 1/2)")
    if not 0.0 < a < 1.0:
        raise ParameterDomainError("a must lie in (0, 1)")
    C = 0.5 - math.sqrt(1.0 - 2.0 * alpha) / (4.0 * m) + a * (1.0 - 2.0 * m) ** (
        1.0 / a
    ) / (4.0 * m)
    if not 0.0 < C < 0.5:
        raise ParameterDomainError(
            f"plateau height C={C:.6g} outside (0, 1/2); "
            "(alpha, m, a) outside the validity region"
        )
    return C


@dataclass(frozen=True)
class FastRatesParams:
    """Parameters of the two-class margin construction.

    ``alpha`` is the target false positive level, ``m`` the plateau width,
    ``a`` the margin exponent and ``C`` the plateau half-height adjusted so
    that the optimal decision threshold ``q_star`` equals 1/2. The class-1
    density integrates to one by the point symmetry of its graph about
    (1/2, 1), so p_1 = p_2 = 1/2.
    """

    alpha: float
    m: float
    a: float
    C: float = field(init=False)
    q_star: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "C", fast_rates_C(self.alpha, self.m, self.a))

    @property
    def curve_exponent(self) -> float:
        """Exponent (1 - a)/a of the density's approach to 1 at x = 1/2."""
        return (1.0 - self.a) / self.a

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "m": self.m,
            "a": self.a,
            "C": self.C,
            "q_star": self.q_star,
        }


def mu1(x, params: FastRatesParams):
    """Class-1 density: 2C on [0, m], 1 - |2x-1|^((1-a)/a) on (m, 1/2],
    extended to (1/2, 1] by mu1(x) = 2 - mu1(1 - x)."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise InvalidInputError("mu1 inputs must lie in [0, 1]")
    low = np.minimum(arr, 1.0 - arr)
    plateau = low <= params.m
    e = params.curve_exponent
    base = np.where(plateau, 2.0 * params.C, 1.0 - np.abs(1.0 - 2.0 * low) ** e)
    out = np.where(arr <= 0.5, base, 2.0 - base)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def _g_antiderivative(t: float, params: FastRatesParams) -> float:
    """G(t) = integral_0^t (mu1(u) - 1) du, in closed form.

    On the plateau G is linear; on the curved part the antiderivative of
    -(1-2u)^e is (1-2u)^(e+1)/(2(e+1)) with e + 1 = 1/a; the symmetry of
    mu1 gives G(t) = G(1-t) above 1/2.
    """
    if t <= 0.0:
        return 0.0
    if t > 0.5:
        return _g_antiderivative(1.0 - t, params)
    m, C, a = params.m, params.C, params.a
    if t <= m:
        return (2.0 * C - 1.0) * t
    curved = (a / 2.0) * (
        (1.0 - 2.0 * t) ** (1.0 / a) - (1.0 - 2.0 * m) ** (1.0 / a)
    )
    return (2.0 * C - 1.0) * m + curved


def pair_statistic(x, x_prime):
    """min(max(1-x, 1-x'), max(x, x')); membership in the corner squares of
    side t is exactly ``pair_statistic < t``."""
    return threshold_pair_stat(x, x_prime)


def eta_pair(x, x_prime, params: FastRatesParams):
    """Pairwise posterior: 1/2 + (mu1(x) - 1)(mu1(x') - 1)/2."""
    g = mu1(x, params)
    g_prime = mu1(x_prime, params)
    out = 0.5 + 0.5 * (np.asarray(g) - 1.0) * (np.asarray(g_prime) - 1.0)
    if np.isscalar(g) and np.isscalar(g_prime):
        return float(out)
    return out


def sample_fast_rates(params: FastRatesParams, n: int, seed: int) -> LabeledDataset:
    """X uniform on [0, 1]; P(Y = 1 | X = x) = mu1(x)/2; labels in {1, 2}."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=n)
    posterior = mu1(x, params) / 2.0
    labels = np.where(rng.uniform(size=n) < posterior, 1, 2)
    return LabeledDataset(x.reshape(-1, 1), labels)


def _lebesgue_corner_squares(t: float) -> float:
    overlap = max(0.0, 2.0 * t - 1.0)
    return 2.0 * t * t - overlap * overlap


def analytic_risks_threshold(t: float, params: FastRatesParams) -> tuple[float, float]:
    """Exact (positive risk, negative risk) of the threshold rule at t.

    With S_t = [0,t]^2 union [1-t,1]^2 and G the antiderivative of
    (mu1 - 1): the double integral of (mu1(x)-1)(mu1(x')-1) over S_t equals
    2 G(t)^2 by inclusion-exclusion (the overlap square for t > 1/2 is
    symmetric about 1/2, where G's integrand is odd, so it contributes 0),
    giving ``R+- (t) = lambda(S_t) +- 2 G(t)^2``.
    """
    if not 0.0 <= t <= 1.0:
        raise InvalidInputError("t must lie in [0, 1]")
    lam = _lebesgue_corner_squares(t)
    g = _g_antiderivative(t, params)
    cross = 2.0 * g * g
    return lam + cross, lam - cross


def optimal_roc(alpha: float, params: FastRatesParams, tol: float = 1e-12):
    """Best achievable true positive rate at level alpha in the threshold
    family, with the achieving threshold.

    The optimal rule lies in the family by construction, so the optimum is
    the largest threshold whose analytic negative risk stays below alpha
    (both risks are non-decreasing in t).
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError("alpha must lie in [0, 1]")

    def r_minus(t):
        return analytic_risks_threshold(t, params)[1]

    if r_minus(1.0) <= alpha:
        return 1.0, 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if r_minus(mid) <= alpha:
            lo = mid
        else:
            hi = mid
    r_plus, _ = analytic_risks_threshold(lo, params)
    return r_plus, lo


def _sign_intervals(params: FastRatesParams):
    """Intervals of constant sign of g = mu1 - 1, with their signs.

    g is negative on the curved part below 1/2 and mirrors positively
    above; the plateau sign follows 2C - 1.
    """
    m, C = params.m, params.C
    plateau_sign = -1.0 if 2.0 * C < 1.0 else 1.0
    return [
        (0.0, m, plateau_sign),
        (m, 0.5, -1.0),
        (0.5, 1.0 - m, 1.0),
        (1.0 - m, 1.0, -plateau_sign),
    ]


def check_quantile_condition(params: FastRatesParams) -> float:
    """Residual of the level condition fixing the optimal threshold at 1/2.

    The false positive rate of the rule {pairwise posterior >= 1/2} must be
    alpha, i.e. the integral of (1 - eta) over {eta > 1/2} must equal
    alpha/2. The region {eta > 1/2} is {g(x) g(x') > 0}; the inner integral
    over x' is evaluated in closed form given the sign of g(x), leaving
    adaptive 1-D quadratures split at the non-smooth points m, 1/2, 1-m.
    """
    intervals = _sign_intervals(params)

    def g(u):
        return mu1(u, params) - 1.0

    lengths = {1.0: 0.0, -1.0: 0.0}
    masses = {1.0: 0.0, -1.0: 0.0}
    for lo, hi, sign in intervals:
        if hi <= lo:
            continue
        val, err = integrate.quad(g, lo, hi, epsabs=QUAD_ABS_TOL, limit=200)
        if err > 1e-8:
            raise NumericalFailureError(
                f"quadrature error {err:.2e} on [{lo}, {hi}]"
            )
        lengths[sign] += hi - lo
        masses[sign] += val

    # integral over {g g' > 0} of (1/2 - g g'/2), assembled from the two
    # same-sign blocks
    total = 0.0
    for sign in (1.0, -1.0):
        total += 0.5 * lengths[sign] ** 2 - 0.5 * masses[sign] ** 2
    return abs(total - params.alpha / 2.0)


def noise_distribution(
    params: FastRatesParams,
    t_grid,
    n_mc: int,
    seed: int,
) -> list[tuple[float, float]]:
    """Monte-Carlo curve t -> P(|eta(X, X') - q_star| <= t) on uniform pairs."""
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if np.any(t_grid < 0.0) or np.any(t_grid > 0.5):
        raise InvalidInputError("t grid values must lie in [0, 1/2]")
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=n_mc)
    x_prime = rng.uniform(size=n_mc)
    margin = np.abs(eta_pair(x, x_prime, params) - params.q_star)
    probs = [(float(t), float(np.mean(margin <= t))) for t in t_grid]
    return probs


def integral_mu1(params: FastRatesParams) -> float:
    """Adaptive quadrature of mu1 over [0, 1] (equals 1 by construction)."""
    total = 0.0
    for lo, hi in ((0.0, params.m), (params.m, 0.5), (0.5, 1.0 - params.m), (1.0 - params.m, 1.0)):
        val, _ = integrate.quad(
            lambda u: mu1(u, params), lo, hi, epsabs=QUAD_ABS_TOL, limit=200
        )
        total += val
    return total
