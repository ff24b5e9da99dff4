import math

import numpy as np
import pytest

from rocsim.core import Bilinear, LabeledDataset, MahalanobisDistance, ThresholdIndicator
from rocsim.exceptions import (
    EmptyClassError,
    InvalidInputError,
    NoNegativePairsError,
    NoPositivePairsError,
)
from rocsim.risk import (
    RiskEstimate,
    ToleranceConfig,
    check_kappa,
    negative_risk_complete,
    negative_risk_pair_sampled,
    negative_risk_tuple_sampled,
    positive_risk_complete,
    tolerance_incomplete,
    tolerance_slow,
    tuple_kernel,
    variance_components,
)

from conftest import random_dataset
from oracles import brute_force_risks


def constant_half_model(dim=3):
    """Bilinear with A = 0 scores exactly 1/2 on every pair."""
    return Bilinear(np.zeros((dim, dim)))


def embedding_model(score_of_pair, n_classes):
    """Bilinear model and basis features realizing given class-pair scores."""
    A = np.zeros((n_classes, n_classes))
    for (k, l), s in score_of_pair.items():
        A[k, l] = A[l, k] = 2.0 * s - 1.0
    return Bilinear(A)


class TestCompleteEstimators:
    def test_constant_model(self, rng):
        ds = random_dataset(rng, 30, 3, 3)
        assert positive_risk_complete(ds, constant_half_model()).value == pytest.approx(0.5)
        assert negative_risk_complete(ds, constant_half_model()).value == pytest.approx(0.5)

    def test_single_positive_pair(self):
        # labels {1,1,2} with unit basis features: the only positive pair is
        # (e1, e2) whose bilinear score is (1 + A_12)/2
        features = np.eye(3)
        ds = LabeledDataset(features, [1, 1, 2])
        A = np.zeros((3, 3))
        A[0, 1] = A[1, 0] = -0.2  # score 0.4
        assert positive_risk_complete(ds, Bilinear(A)).value == pytest.approx(0.4)

    def test_single_negative_pair(self):
        features = np.eye(2)
        ds = LabeledDataset(features, [1, 2])
        A = np.full((2, 2), 0.0)
        A[0, 1] = A[1, 0] = 0.8  # score 0.9
        assert negative_risk_complete(ds, Bilinear(A)).value == pytest.approx(0.9)

    @pytest.mark.parametrize("family", ["bilinear", "mahalanobis", "threshold"])
    def test_brute_force_oracle(self, rng, family):
        for _ in range(4):
            if family == "threshold":
                ds = LabeledDataset(
                    rng.uniform(size=(20, 1)), rng.integers(1, 3, size=20)
                )
                model = ThresholdIndicator(float(rng.uniform(0.2, 0.8)))
            else:
                ds = random_dataset(rng, 20, 3, 3)
                A = rng.normal(size=(3, 3))
                if family == "bilinear":
                    model = Bilinear(A)
                else:
                    model = MahalanobisDistance(A @ A.T)
            r_plus, r_minus = brute_force_risks(ds, model)
            assert positive_risk_complete(ds, model).value == pytest.approx(
                r_plus, abs=1e-12
            )
            assert negative_risk_complete(ds, model).value == pytest.approx(
                r_minus, abs=1e-12
            )

    def test_missing_pair_types(self):
        same = LabeledDataset(np.zeros((3, 1)), [1, 1, 1])
        with pytest.raises(NoNegativePairsError):
            negative_risk_complete(same, constant_half_model(1))
        distinct = LabeledDataset(np.zeros((3, 1)), [1, 2, 3])
        with pytest.raises(NoPositivePairsError):
            positive_risk_complete(distinct, constant_half_model(1))

    def test_metadata(self, rng):
        ds = random_dataset(rng, 25, 3, 2)
        est = positive_risk_complete(ds, constant_half_model(2))
        assert est.scheme == "complete-positive"
        assert est.pairs_used == ds.n_plus
        assert est.budget is None and est.seed is None
        payload = est.to_json_dict()
        assert set(payload) == {"value", "scheme", "pairs_used", "budget", "seed"}


class TestPairSampled:
    def test_single_candidate(self):
        features = np.eye(2)
        ds = LabeledDataset(features, [1, 2])
        A = np.zeros((2, 2))
        A[0, 1] = A[1, 0] = -0.16  # score 0.42
        est = negative_risk_pair_sampled(ds, Bilinear(A), budget=1, seed=5)
        assert est.value == pytest.approx(0.42)
        assert est.pairs_used == 1

    def test_constant_model_any_budget(self, rng):
        ds = random_dataset(rng, 40, 4, 2)
        for budget in (1, 7, 100):
            est = negative_risk_pair_sampled(ds, constant_half_model(2), budget, seed=3)
            assert est.value == pytest.approx(0.5)

    def test_deterministic(self, rng):
        ds = random_dataset(rng, 50, 4, 3)
        model = Bilinear(rng.normal(size=(3, 3)))
        a = negative_risk_pair_sampled(ds, model, 64, seed=99)
        b = negative_risk_pair_sampled(ds, model, 64, seed=99)
        assert a == b
        c = negative_risk_pair_sampled(ds, model, 64, seed=100)
        assert c.value != a.value

    def test_unbiased(self, rng):
        ds = random_dataset(rng, 40, 4, 3)
        A = rng.normal(size=(3, 3))
        model = Bilinear(0.5 * (A + A.T))
        target = negative_risk_complete(ds, model).value
        reps = 20000
        values = np.array(
            [
                negative_risk_pair_sampled(ds, model, 16, seed=r).value
                for r in range(reps)
            ]
        )
        se = values.std(ddof=1) / math.sqrt(reps)
        assert abs(values.mean() - target) <= 4 * se

    def test_requires_negative_pairs(self):
        ds = LabeledDataset(np.zeros((3, 1)), [2, 2, 2])
        with pytest.raises(NoNegativePairsError):
            negative_risk_pair_sampled(ds, constant_half_model(1), 4, seed=0)


class TestTupleKernel:
    def test_constant(self, rng):
        xs = [rng.normal(size=2) for _ in range(4)]
        val = tuple_kernel(xs, constant_half_model(2), [3, 4, 5, 6])
        assert val == pytest.approx(0.5)

    def test_two_classes_reduces_to_score(self, rng):
        A = rng.normal(size=(2, 2))
        model = Bilinear(0.5 * (A + A.T))
        x1, x2 = rng.normal(size=2), rng.normal(size=2)
        for counts in ([1, 1], [10, 3], [7, 70]):
            from rocsim.core import score

            assert tuple_kernel([x1, x2], model, counts) == pytest.approx(
                score(model, x1, x2)
            )

    def test_three_equal_classes_uniform_average(self):
        # scores 0.0, 0.3, 0.9 on the class pairs (1,2), (1,3), (2,3)
        model = embedding_model({(0, 1): 0.0, (0, 2): 0.3, (1, 2): 0.9}, 3)
        xs = [np.eye(3)[k] for k in range(3)]
        assert tuple_kernel(xs, model, [5, 5, 5]) == pytest.approx(0.4)

    def test_wrong_arity(self, rng):
        with pytest.raises(InvalidInputError):
            tuple_kernel([rng.normal(size=2)] * 3, constant_half_model(2), [2, 2])


class TestTupleSampled:
    def test_constant(self, rng):
        ds = random_dataset(rng, 36, 3, 2)
        est = negative_risk_tuple_sampled(ds, constant_half_model(2), 11, seed=4)
        assert est.value == pytest.approx(0.5)
        K = ds.n_classes
        assert est.pairs_used == 11 * K * (K - 1) // 2

    def test_unbiased(self, rng):
        ds = random_dataset(rng, 40, 4, 3)
        A = rng.normal(size=(3, 3))
        model = Bilinear(0.5 * (A + A.T))
        target = negative_risk_complete(ds, model).value
        reps = 20000
        values = np.array(
            [
                negative_risk_tuple_sampled(ds, model, 4, seed=r).value
                for r in range(reps)
            ]
        )
        se = values.std(ddof=1) / math.sqrt(reps)
        assert abs(values.mean() - target) <= 4 * se

    def test_variance_shrinks_as_one_over_budget(self, rng):
        ds = random_dataset(rng, 60, 2, 2)
        A = rng.normal(size=(2, 2))
        model = Bilinear(0.5 * (A + A.T))
        budgets = [4, 8, 16, 32, 64]
        log_var = []
        for b_idx, budget in enumerate(budgets):
            vals = [
                negative_risk_tuple_sampled(ds, model, budget, seed=1000 * b_idx + r).value
                for r in range(3000)
            ]
            log_var.append(math.log(np.var(vals)))
        slope = np.polyfit(np.log(budgets), log_var, 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.1)

    def test_empty_class_error(self):
        ds = LabeledDataset(np.zeros((4, 1)), [1, 1, 3, 3])  # class 2 empty
        with pytest.raises(EmptyClassError):
            negative_risk_tuple_sampled(ds, constant_half_model(1), 5, seed=0)


class TestVarianceComponents:
    def test_constant_is_zero(self, rng):
        ds = random_dataset(rng, 30, 3, 2)
        var_h, var_pair = variance_components(ds, constant_half_model(2), 500, seed=1)
        assert var_h == pytest.approx(0.0, abs=1e-30)
        assert var_pair == pytest.approx(0.0, abs=1e-30)

    def test_two_classes_agree(self, rng):
        # with K=2 the tuple kernel equals the pair score, so both Monte
        # Carlo variances estimate the same quantity
        ds = random_dataset(rng, 50, 2, 3)
        A = rng.normal(size=(3, 3))
        model = Bilinear(0.5 * (A + A.T))
        n_mc = 60000
        var_h, var_pair = variance_components(ds, model, n_mc, seed=2)
        # standard error of a variance estimate ~ var * sqrt(2/n)
        tol = 3.0 * max(var_h, var_pair) * math.sqrt(2.0 / n_mc)
        assert abs(var_h - var_pair) <= 3 * tol

    def test_adversarial_hot_class_pair_prefers_tuples(self):
        # class pair (1,2) scores 0.9, everything else 0.1: the tuple kernel
        # is almost deterministic while single negative pairs swing wildly
        rng = np.random.default_rng(7)
        K = 5
        labels = np.repeat(np.arange(1, K + 1), 30)
        features = np.eye(K)[labels - 1]
        ds = LabeledDataset(features, labels)
        scores = {}
        for k in range(K):
            for l in range(k + 1, K):
                scores[(k, l)] = 0.9 if (k, l) == (0, 1) else 0.1
        model = embedding_model(scores, K)
        var_h, var_pair = variance_components(ds, model, 20000, seed=3)
        assert var_pair > (K * (K - 1) / 2) * var_h

    def test_degenerate(self):
        ds = LabeledDataset(np.zeros((3, 1)), [1, 1, 1])
        with pytest.raises(NoNegativePairsError):
            variance_components(ds, constant_half_model(1), 10, seed=0)


class TestToleranceSlow:
    def test_direct_value(self):
        cfg = ToleranceConfig(vc_dim=1, kappa=0.5, universal_c=1.0, delta=0.1)
        expected = 2 * 1 * 2 * math.sqrt(1 / 101) + 2 * 2 * 3 * math.sqrt(
            math.log(30) / 100
        )
        assert tolerance_slow(101, cfg) == pytest.approx(expected, rel=1e-12)

    def test_sqrt_n_scaling(self):
        cfg = ToleranceConfig(vc_dim=3, kappa=0.3, delta=0.05)
        n = 10**6
        assert tolerance_slow(4 * n, cfg) / tolerance_slow(n, cfg) == pytest.approx(
            0.5, rel=0.05
        )

    def test_monotone_decreasing(self):
        cfg = ToleranceConfig(vc_dim=2, kappa=0.4, delta=0.2)
        values = [tolerance_slow(n, cfg) for n in range(2, 10001)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_increasing_in_vc_and_confidence(self):
        base = ToleranceConfig(vc_dim=2, kappa=0.4, delta=0.2)
        assert tolerance_slow(50, ToleranceConfig(vc_dim=3, kappa=0.4, delta=0.2)) > tolerance_slow(50, base)
        assert tolerance_slow(50, ToleranceConfig(vc_dim=2, kappa=0.4, delta=0.1)) > tolerance_slow(50, base)

    def test_rejects_tiny_n(self):
        with pytest.raises(InvalidInputError):
            tolerance_slow(1, ToleranceConfig())


class TestToleranceIncomplete:
    def test_direct_value(self):
        cfg = ToleranceConfig(vc_dim=1, delta=0.1)
        counts = [100, 100, 100]
        expected = (
            4 * math.sqrt(math.log(101) / 100)
            + math.sqrt(math.log(20) / 100)
            + math.sqrt(2 * (math.log(1 + 100**3) + math.log(40)) / 100)
        )
        assert tolerance_incomplete(counts, 100, cfg) == pytest.approx(
            expected, rel=1e-12
        )

    def test_doubling_budget_shrinks_only_third_term(self):
        cfg = ToleranceConfig(vc_dim=2, delta=0.05)
        counts = [50, 60, 70]
        phi_b = tolerance_incomplete(counts, 40, cfg)
        phi_2b = tolerance_incomplete(counts, 80, cfg)
        third_b = phi_b - tolerance_incomplete(counts, 10**15, cfg)
        assert phi_b - phi_2b == pytest.approx(third_b * (1 - 1 / math.sqrt(2)), rel=1e-6)

    def test_budget_limit_is_first_two_terms(self):
        cfg = ToleranceConfig(vc_dim=1, delta=0.1)
        counts = np.array([30, 40])
        first_two = 4 * math.sqrt(math.log(31) / 30) + math.sqrt(math.log(20) / 30)
        assert tolerance_incomplete(counts, 10**18, cfg) == pytest.approx(
            first_two, rel=1e-8
        )

    def test_huge_class_product_is_stable(self):
        cfg = ToleranceConfig(vc_dim=1, delta=0.1)
        value = tolerance_incomplete([10**6] * 50, 100, cfg)
        assert np.isfinite(value) and value > 0

    def test_empty_class(self):
        with pytest.raises(EmptyClassError):
            tolerance_incomplete([3, 0, 5], 10, ToleranceConfig())


def test_check_kappa_warns(rng):
    ds = random_dataset(rng, 40, 2, 2)
    ok_cfg = ToleranceConfig(kappa=0.2)
    assert check_kappa(ds, ok_cfg)
    bad_cfg = ToleranceConfig(kappa=0.9)
    with pytest.warns(UserWarning):
        assert not check_kappa(ds, bad_cfg)


def test_risk_estimate_is_frozen():
    est = RiskEstimate(value=0.5, scheme="complete-positive", pairs_used=10)
    with pytest.raises(AttributeError):
        est.value = 0.6
