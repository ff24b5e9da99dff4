import numpy as np
import pytest

from rocsim.core import (
    Bilinear,
    LabeledDataset,
    MahalanobisDistance,
    ThresholdIndicator,
    pair_counts,
    pair_label,
    score,
    score_pairs,
)
from rocsim.exceptions import (
    DimensionMismatchError,
    EmptySampleError,
    InvalidInputError,
)

from conftest import random_dataset


class TestScore:
    def test_bilinear_zero_matrix_gives_half(self, rng):
        model = Bilinear(np.zeros((3, 3)))
        for _ in range(5):
            assert score(model, rng.normal(size=3), rng.normal(size=3)) == 0.5

    def test_threshold_indicator_example(self):
        # min(max(0.9, 0.8), max(0.1, 0.2)) = 0.2 < 0.3
        model = ThresholdIndicator(0.3)
        assert score(model, 0.1, 0.2) == 1.0
        assert score(model, 0.5, 0.5) == 0.0

    def test_mahalanobis_euclidean_case(self):
        model = MahalanobisDistance(np.eye(2))
        assert score(model, np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(5.0)

    def test_symmetry_all_families(self, rng):
        A = rng.normal(size=(3, 3))
        sym = Bilinear(0.5 * (A + A.T))
        psd = MahalanobisDistance(A @ A.T)
        thr = ThresholdIndicator(0.4)
        for _ in range(1000):
            x, xp = rng.normal(size=3), rng.normal(size=3)
            assert score(sym, x, xp) == pytest.approx(score(sym, xp, x), abs=1e-12)
            assert score(psd, x, xp) == pytest.approx(score(psd, xp, x), abs=1e-12)
            u, up = rng.uniform(), rng.uniform()
            assert score(thr, u, up) == score(thr, up, u)

    def test_bilinear_unit_ball_scores_in_unit_interval(self, rng):
        for _ in range(1000):
            A = rng.normal(size=(4, 4))
            A /= np.linalg.norm(A) / rng.uniform(0.01, 1.0)
            x = rng.normal(size=4)
            x /= np.linalg.norm(x)
            xp = rng.normal(size=4)
            xp /= np.linalg.norm(xp)
            assert 0.0 <= score(Bilinear(A), x, xp) <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            score(Bilinear(np.eye(3)), np.ones(2), np.ones(3))
        with pytest.raises(DimensionMismatchError):
            score(ThresholdIndicator(0.5), np.ones(2), np.ones(2))

    def test_threshold_inputs_outside_unit_interval_rejected(self):
        with pytest.raises(InvalidInputError):
            score(ThresholdIndicator(0.5), 1.5, 0.2)

    def test_score_pairs_matches_scalar_score(self, rng):
        A = rng.normal(size=(3, 3))
        models = [Bilinear(A), MahalanobisDistance(A @ A.T + np.eye(3))]
        left = rng.normal(size=(40, 3))
        right = rng.normal(size=(40, 3))
        for model in models:
            batch = score_pairs(model, left, right)
            singles = [score(model, left[i], right[i]) for i in range(40)]
            np.testing.assert_allclose(batch, singles, atol=1e-12)


class TestModels:
    def test_bilinear_requires_square(self):
        with pytest.raises(InvalidInputError):
            Bilinear(np.ones((2, 3)))

    def test_threshold_requires_unit_interval(self):
        with pytest.raises(InvalidInputError):
            ThresholdIndicator(1.5)

    def test_mahalanobis_rejects_asymmetric(self):
        with pytest.raises(InvalidInputError):
            MahalanobisDistance(np.array([[1.0, 0.5], [-0.5, 1.0]]))

    def test_mahalanobis_rejects_indefinite(self):
        with pytest.raises(InvalidInputError):
            MahalanobisDistance(np.diag([1.0, -1.0]))

    def test_mahalanobis_accepts_tiny_negative_eigenvalue(self):
        MahalanobisDistance(np.diag([1.0, -5e-11]))


class TestLabeledDataset:
    def test_class_bookkeeping(self, rng):
        ds = random_dataset(rng, 60, 4, 3)
        assert ds.class_counts.sum() == ds.n
        seen = np.concatenate(ds.class_index)
        assert sorted(seen.tolist()) == list(range(ds.n))
        for k, members in enumerate(ds.class_index):
            assert np.all(ds.labels[members] == k + 1)
            assert members.shape[0] == ds.class_counts[k]

    def test_immutability(self, rng):
        ds = random_dataset(rng, 20, 3, 2)
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0
        with pytest.raises(ValueError):
            ds.labels[0] = 2

    def test_rejects_bad_labels(self):
        with pytest.raises(InvalidInputError):
            LabeledDataset(np.ones((3, 2)), [0, 1, 2])
        with pytest.raises(EmptySampleError):
            LabeledDataset(np.ones((0, 2)), [])


class TestPairCounts:
    def test_hand_examples(self):
        ds = LabeledDataset(np.zeros((3, 1)), [1, 1, 2])
        assert pair_counts(ds) == (1, 2)
        ds = LabeledDataset(np.zeros((3, 1)), [1, 2, 3])
        assert pair_counts(ds) == (0, 3)

    def test_balanced_ten_class_ratio(self):
        # K=10 classes of 6000: negatives outnumber positives ~(K-1)*n_k/(n_k-1)
        labels = np.repeat(np.arange(1, 11), 6000)
        ds = LabeledDataset(np.zeros((labels.size, 1)), labels)
        n_plus, n_minus = pair_counts(ds)
        assert n_plus + n_minus == labels.size * (labels.size - 1) // 2
        assert n_minus / n_plus == pytest.approx(9.0, abs=0.01)

    def test_matches_double_loop(self, rng):
        for _ in range(5):
            n = int(rng.integers(2, 101))
            ds = random_dataset(rng, n, 4, 1)
            n_plus = sum(
                1
                for i in range(n)
                for j in range(i + 1, n)
                if ds.labels[i] == ds.labels[j]
            )
            assert pair_counts(ds) == (n_plus, n * (n - 1) // 2 - n_plus)

    def test_single_point_errors(self):
        ds = LabeledDataset(np.zeros((1, 1)), [1])
        with pytest.raises(EmptySampleError):
            pair_counts(ds)


def test_pair_label():
    assert pair_label(3, 3) == 1
    assert pair_label(3, 4) == -1
