import numpy as np
import pytest

from rocsim.core import LabeledDataset
from rocsim.exceptions import (
    InfeasibleProblemError,
    NoNegativePairsError,
    NoPositivePairsError,
)
from rocsim.solvers import (
    KktSolution,
    compute_P_N,
    kkt_residuals,
    solve_bilinear_kkt,
)
from rocsim.synth import SphereParams, sample_sphere

from conftest import random_dataset
from oracles import brute_force_P_N, projected_gradient_objectives


def random_instance(rng, d):
    """A feasible (P, N, alpha) triple with O(1) norms."""
    P = rng.normal(size=(d, d))
    P = 0.5 * (P + P.T)
    P *= rng.uniform(0.2, 2.0) / max(np.linalg.norm(P), 1e-12)
    N = rng.normal(size=(d, d))
    N = 0.5 * (N + N.T)
    N *= rng.uniform(0.2, 2.0) / max(np.linalg.norm(N), 1e-12)
    floor = max(1e-3, (1.0 - np.linalg.norm(N)) / 2.0 + 1e-3)
    alpha = float(rng.uniform(min(floor, 0.94), 0.95))
    return P, N, alpha


class TestComputePN:
    def test_identical_points_have_no_negative_pairs(self):
        x = np.array([[0.3, 0.4], [0.3, 0.4]])
        ds = LabeledDataset(x, [1, 1])
        with pytest.raises(NoNegativePairsError):
            compute_P_N(ds)

    def test_two_singletons_have_no_positive_pairs(self):
        ds = LabeledDataset(np.eye(2), [1, 2])
        with pytest.raises(NoPositivePairsError):
            compute_P_N(ds)

    def test_matches_brute_force_on_sphere_sample(self):
        ds = sample_sphere(SphereParams(), 30, seed=21)
        P, N = compute_P_N(ds)
        P_ref, N_ref = brute_force_P_N(ds)
        np.testing.assert_allclose(P, P_ref, atol=1e-12)
        np.testing.assert_allclose(N, N_ref, atol=1e-12)
        np.testing.assert_allclose(P, P.T, atol=0)
        np.testing.assert_allclose(N, N.T, atol=0)


class TestSolveKkt:
    def test_orthogonal_constraint_inactive(self, rng):
        # <N, P> = 0 with beta > 0: constraint slack at the unconstrained
        # maximizer P / ||P||
        P = np.diag([1.0, 0.0])
        N = np.diag([0.0, 1.0])
        sol = solve_bilinear_kkt(P, N, alpha=0.7)
        assert sol.case_tag == "interior"
        np.testing.assert_allclose(sol.A, P / np.linalg.norm(P), atol=1e-12)
        assert sol.lam == 0.0

    def test_scalar_example(self):
        # d=1, P=(2), N=(1), alpha=1/2: maximize 2a subject to a <= 0,
        # |a| <= 1 -> a = 0 with multipliers lambda=2, gamma=0
        P = np.array([[2.0]])
        N = np.array([[1.0]])
        sol = solve_bilinear_kkt(P, N, alpha=0.5)
        np.testing.assert_allclose(sol.A, [[0.0]], atol=1e-15)
        assert sol.lam == pytest.approx(2.0)
        assert sol.gamma == pytest.approx(0.0)
        # 1-D grid oracle
        grid = np.linspace(-1.0, 1.0, 200001)
        feasible = grid[grid <= 0.0]
        best = feasible[np.argmax(2.0 * feasible)]
        assert abs(best - sol.A[0, 0]) <= 1e-5

    def test_zero_P_cases(self):
        N = np.array([[0.6, 0.0], [0.0, 0.8]])
        sol = solve_bilinear_kkt(np.zeros((2, 2)), N, alpha=0.6)
        assert sol.case_tag == "zero-P"
        np.testing.assert_allclose(sol.A, 0.0, atol=0)
        sol_neg = solve_bilinear_kkt(np.zeros((2, 2)), N, alpha=0.3)
        assert sol_neg.case_tag == "zero-P"
        assert np.sum(N * sol_neg.A) == pytest.approx(2 * 0.3 - 1, abs=1e-12)
        assert np.linalg.norm(sol_neg.A) <= 1.0

    def test_colinear_case(self):
        P = np.diag([0.8, 0.4])
        sol = solve_bilinear_kkt(P, 0.5 * P, alpha=0.4)
        assert sol.case_tag == "colinear"
        assert sol.lam == pytest.approx(2.0)
        assert sol.gamma == 0.0
        res = kkt_residuals(sol, P, 0.5 * P)
        assert res.max_abs() <= 1e-12
        assert np.sum(sol.A * sol.A) < 1.0

    def test_infeasible(self):
        N = np.diag([0.1, 0.1])
        with pytest.raises(InfeasibleProblemError):
            solve_bilinear_kkt(np.eye(2), N, alpha=0.05)

    def test_random_instances_satisfy_kkt(self, rng):
        for trial in range(200):
            d = (1, 2, 3, 5)[trial % 4]
            P, N, alpha = random_instance(rng, d)
            sol = solve_bilinear_kkt(P, N, alpha)
            res = kkt_residuals(sol, P, N)
            assert res.max_abs() <= 1e-8, (trial, sol.case_tag, res)

    def test_objective_matches_projected_gradient_oracle(self, rng):
        instances = [random_instance(rng, 3) for _ in range(60)]
        sols = [solve_bilinear_kkt(P, N, a) for P, N, a in instances]
        best = projected_gradient_objectives(
            np.stack([P for P, _, _ in instances]),
            np.stack([N for _, N, _ in instances]),
            np.array([a for _, _, a in instances]),
            iters=600,
        )
        for sol, oracle, (P, _, _) in zip(sols, best, instances):
            assert np.sum(P * sol.A) == pytest.approx(oracle, abs=1e-4)

    def test_lambda_non_increasing_in_alpha(self, rng):
        ds = sample_sphere(SphereParams(), 300, seed=3)
        P, N = compute_P_N(ds)
        floor = (1.0 - np.linalg.norm(N)) / 2.0
        alphas = np.linspace(floor + 0.01, 0.6, 15)
        lams = []
        for alpha in alphas:
            sol = solve_bilinear_kkt(P, N, float(alpha))
            if sol.case_tag == "boundary":
                lams.append(sol.lam)
        assert len(lams) >= 5
        for a, b in zip(lams, lams[1:]):
            assert b <= a + 1e-8


class TestResiduals:
    def test_exact_solution_has_tiny_residuals(self, rng):
        P, N, alpha = random_instance(rng, 3)
        sol = solve_bilinear_kkt(P, N, alpha)
        res = kkt_residuals(sol, P, N)
        assert res.max_abs() <= 1e-10

    def test_perturbation_shows_in_stationarity(self, rng):
        for _ in range(20):
            P, N, alpha = random_instance(rng, 3)
            sol = solve_bilinear_kkt(P, N, alpha)
            if sol.gamma == 0.0:
                continue
            A = sol.A.copy()
            A[0, 1] += 0.1
            bumped = KktSolution(
                A=A, lam=sol.lam, gamma=sol.gamma, case_tag=sol.case_tag, beta=sol.beta
            )
            res = kkt_residuals(bumped, P, N)
            assert res.stationarity >= 0.1 * 2 * sol.gamma - 1e-8

    def test_interior_case_lambda_slack_is_exact_zero(self):
        P = np.diag([1.0, 0.0])
        N = np.diag([0.0, 1.0])
        sol = solve_bilinear_kkt(P, N, alpha=0.7)
        res = kkt_residuals(sol, P, N)
        assert res.cs_lambda == 0.0
