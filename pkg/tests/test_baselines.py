import itertools

import numpy as np
import pytest

from condensation import datasets as ds
from condensation.baselines import CompareConfig, agglomerative, compare, kmeans
from condensation.engine import CondensationConfig
from condensation.hierarchy import adjusted_rand_index

X3 = np.array([[0.0], [1.0], [10.0]])


def brute_force_kmeans(X, k):
    """Smallest within-cluster sum of squares over every assignment."""
    best = (np.inf, None)
    for assign in itertools.product(range(k), repeat=len(X)):
        assign = np.array(assign)
        if len(np.unique(assign)) < k:
            continue
        sse = sum(np.sum((X[assign == j] - X[assign == j].mean(axis=0)) ** 2) for j in range(k))
        best = min(best, (sse, tuple(assign)), key=lambda b: b[0])
    return best


class TestKMeans:
    def test_three_points(self):
        res = kmeans(X3, 2)
        assert res.labels[0] == res.labels[1] != res.labels[2]
        sse, assign = brute_force_kmeans(X3, 2)
        assert res.inertia == pytest.approx(sse) == 0.5
        assert adjusted_rand_index(res.labels, assign) == 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_lloyd_fixpoint(self, seed):
        # a single seeding reaches a local optimum: a fixpoint no better than the global one
        X = np.random.default_rng(seed).normal(size=(7, 2))
        res = kmeans(X, 2, seed=seed)
        centers = np.array([X[res.labels == j].mean(axis=0) for j in range(2)])
        nearest = np.argmin(((X[:, None] - centers[None]) ** 2).sum(-1), axis=1)
        assert np.array_equal(nearest, res.labels)
        assert res.inertia >= brute_force_kmeans(X, 2)[0] - 1e-12

    def test_k_equals_n(self):
        X = np.random.default_rng(0).normal(size=(6, 2))
        res = kmeans(X, 6)
        assert res.inertia == 0 and res.n_clusters == 6

    def test_far_pairs(self):
        X = np.array([[0, 0], [0.1, 0], [100, 0], [100.1, 0]])
        lab = kmeans(X, 2).labels
        assert lab[0] == lab[1] and lab[2] == lab[3] and lab[0] != lab[2]

    def test_history_nonincreasing(self, blobs_dataset):
        res = kmeans(blobs_dataset.data, 3, seed=4)
        assert np.all(np.diff(res.history) <= 1e-9)
        assert adjusted_rand_index(blobs_dataset.labels, res.labels) > 0.9

    def test_deterministic(self, blobs_dataset):
        a = kmeans(blobs_dataset.data, 3, seed=7, minibatch=True)
        b = kmeans(blobs_dataset.data, 3, seed=7, minibatch=True)
        assert np.array_equal(a.labels, b.labels)

    def test_minibatch_blobs(self, blobs_dataset):
        res = kmeans(blobs_dataset.data, 3, minibatch=True, batch_size=50)
        assert res.method == "minibatch-kmeans"
        assert adjusted_rand_index(blobs_dataset.labels, res.labels) > 0.9

    @pytest.mark.parametrize("k", [1, 4])
    def test_k_range(self, k):
        with pytest.raises(ValueError):
            kmeans(X3, k)


class TestAgglomerative:
    def test_average_heights(self):
        res = agglomerative(X3, 1, "average")
        assert res.merge_heights == [1.0, 9.5]

    def test_average_two_clusters(self):
        lab = agglomerative(X3, 2, "average").labels
        assert lab.tolist() == [0, 0, 1]

    def test_ward_heights(self):
        # ward height sqrt(2 * delta SSE): {0,1} costs 0.5, joining 10 costs 2*9.5^2/3
        res = agglomerative(X3, 1, "ward")
        np.testing.assert_allclose(res.merge_heights, [1.0, np.sqrt(2 * 2 * 9.5**2 / 3)], rtol=1e-12)

    def test_n_equals_n(self):
        assert agglomerative(X3, 3).labels.tolist() == [0, 1, 2]

    def test_ward_two_blobs(self):
        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(size=(20, 2)), rng.normal(size=(20, 2)) + 20])
        lab = agglomerative(X, 2, "ward").labels
        assert adjusted_rand_index(lab, np.repeat([0, 1], 20)) == 1.0

    @pytest.mark.parametrize("linkage", ["ward", "average"])
    def test_heights_nondecreasing(self, linkage):
        X = np.random.default_rng(3).normal(size=(40, 3))
        h = agglomerative(X, 1, linkage).merge_heights
        assert len(h) == 39 and np.all(np.diff(h) >= -1e-12)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            agglomerative(X3, 0)
        with pytest.raises(ValueError):
            agglomerative(X3, 2, "single")


class TestCompare:
    def test_report(self):
        d = ds.blobs(60, seed=3)
        rep = compare(d, CompareConfig(condensation=CondensationConfig(epsilon0="nn")))
        assert set(rep["methods"]) == {
            "condensation-early", "condensation-late", "kmeans", "minibatch-kmeans", "ward", "average"
        }
        m = rep["methods"]
        assert m["condensation-early"]["n_clusters"] >= m["condensation-late"]["n_clusters"]
        for entry in m.values():
            assert len(entry["labels"]) == 60 and -1 <= entry["ari"] <= 1
        assert len(rep["condensation"]["ari_per_iteration"]) == rep["condensation"]["n_iterations"] + 1

    def test_unlabeled(self):
        d = ds.no_structure(40, seed=1)
        rep = compare(d)
        assert all("ari" not in e for e in rep["methods"].values())
