import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from condensation.operators import (
    AffinityMatrix,
    apply_operator,
    diffusion_operator,
    gaussian_affinity,
    infinitesimal_generator,
    markov_normalize,
    pairwise_distances,
    velocity_field,
)
from oracles import condensation_step, naive_distances

# Frozen from the pure-Python oracle (tests/oracles.py) on X = [0, 1, 10], eps = 4.
HAND_P = np.array([
    [0.5621765010981856, 0.4378234988879265, 1.3887943847833057e-11],
    [0.4378234986315903, 0.5621764997631816, 1.6052280508296558e-09],
    [7.80747569197752e-12, 9.024214910133122e-10, 0.999999999089771],
])
HAND_Q = np.array([1.778800783085293, 1.778800784676633, 1.000000001619116])
HAND_X1 = np.array([0.43782349902680595, 0.5621765158154621, 9.99999999180013])

points = arrays(
    np.float64,
    st.tuples(st.integers(2, 12), st.integers(1, 4)),
    elements=st.floats(-10, 10, allow_nan=False, width=64),
)


class TestDistances:
    def test_pythagorean(self):
        assert np.array_equal(pairwise_distances([[0, 0], [3, 4]]), [[0, 5], [5, 0]])

    def test_one_dimensional(self):
        assert np.array_equal(pairwise_distances([[0], [1], [3]]), [[0, 1, 3], [1, 0, 2], [3, 2, 0]])

    def test_matches_loop_oracle(self):
        X = np.random.default_rng(3).normal(size=(10, 4))
        np.testing.assert_allclose(pairwise_distances(X), naive_distances(X.tolist()), rtol=0, atol=1e-12)

    def test_rejects_non_finite_with_row(self):
        with pytest.raises(ValueError, match="row 2"):
            pairwise_distances([[0, 0], [1, 1], [np.nan, 0]])

    def test_rejects_single_point(self):
        with pytest.raises(ValueError):
            pairwise_distances([[1.0, 2.0]])

    @given(points)
    def test_symmetric_zero_diagonal(self, X):
        D = pairwise_distances(X)
        assert np.array_equal(D, D.T)
        assert np.all(np.diag(D) == 0)


class TestAffinity:
    def test_zero_distance_is_one(self):
        assert gaussian_affinity(np.zeros((2, 2)), 0.5).values[0, 1] == 1.0

    def test_one_over_e(self):
        A = gaussian_affinity(np.array([[0, math.sqrt(3)], [math.sqrt(3), 0]]), 3.0)
        assert A.values[0, 1] == pytest.approx(0.3678794, abs=1e-7)

    def test_two_points(self):
        A = gaussian_affinity(np.array([[0.0, 1.0], [1.0, 0.0]]), 4.0).values
        e = math.exp(-0.25)
        np.testing.assert_allclose(A, [[1, e], [e, 1]], rtol=1e-15)
        assert e == pytest.approx(0.7788008, abs=1e-7)

    @pytest.mark.parametrize("eps", [0.0, -1.0, np.inf, np.nan])
    def test_bad_epsilon(self, eps):
        with pytest.raises(ValueError):
            gaussian_affinity(np.zeros((2, 2)), eps)


class TestMarkovNormalize:
    def test_identical_points(self):
        P = markov_normalize(AffinityMatrix(np.ones((2, 2)), 1.0), "anisotropic")
        np.testing.assert_array_equal(P.degrees, [2, 2])
        np.testing.assert_array_equal(P.values, [[0.5, 0.5], [0.5, 0.5]])

    @pytest.mark.parametrize("kind", ["anisotropic", "homogeneous"])
    def test_identity_affinity(self, kind):
        P = markov_normalize(AffinityMatrix(np.eye(3), 1.0), kind)
        np.testing.assert_array_equal(P.values, np.eye(3))

    def test_hand_trace(self):
        P = diffusion_operator([[0.0], [1.0], [10.0]], 4.0)
        np.testing.assert_allclose(P.values, HAND_P, rtol=0, atol=1e-9)
        np.testing.assert_allclose(P.degrees, HAND_Q, rtol=0, atol=1e-12)
        assert P.values[0, 0] == pytest.approx(0.562, abs=5e-4)

    def test_hand_trace_oracle_is_live(self):
        P, Q, _, _ = condensation_step([[0.0], [1.0], [10.0]], 4.0)
        np.testing.assert_allclose(P, HAND_P, rtol=0, atol=1e-15)

    def test_homogeneous_is_degree_normalized(self):
        X = np.random.default_rng(0).normal(size=(6, 2))
        A = gaussian_affinity(pairwise_distances(X), 1.0).values
        P = diffusion_operator(X, 1.0, "homogeneous").values
        np.testing.assert_allclose(P, A / A.sum(axis=1, keepdims=True), rtol=1e-13)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            markov_normalize(AffinityMatrix(np.eye(2), 1.0), "lazy")

    @settings(max_examples=50, deadline=None)
    @given(points, st.floats(0.05, 50), st.sampled_from(["anisotropic", "homogeneous"]))
    def test_operator_invariants(self, X, eps, kind):
        P = diffusion_operator(X, eps, kind)
        assert np.all(P.values >= 0)
        np.testing.assert_allclose(P.values.sum(axis=1), 1.0, rtol=0, atol=1e-10)
        s = np.sqrt(P.norm)
        S = P.values * s[:, None] / s[None, :]
        np.testing.assert_allclose(S, S.T, rtol=0, atol=1e-10)
        w = P.eigenvalues()
        assert w.min() >= -1 - 1e-8 and w.max() <= 1 + 1e-8
        assert w[0] == pytest.approx(1.0, abs=1e-8)

    def test_duplicate_rows_identical(self):
        X = np.random.default_rng(1).normal(size=(7, 3))
        X[5] = X[2]
        P = diffusion_operator(X, 0.7).values
        assert np.array_equal(P[2, [i for i in range(7) if i not in (2, 5)]], P[5, [i for i in range(7) if i not in (2, 5)]])
        Y = apply_operator(P, X)
        assert np.array_equal(Y[2], Y[5])

    @settings(max_examples=30, deadline=None)
    @given(points, st.randoms(use_true_random=False))
    def test_permutation_equivariance(self, X, rnd):
        perm = list(range(len(X)))
        rnd.shuffle(perm)
        P = diffusion_operator(X, 1.3).values
        Pp = diffusion_operator(X[perm], 1.3).values
        np.testing.assert_allclose(Pp, P[np.ix_(perm, perm)], rtol=0, atol=1e-12)
        # with order-independent reductions the result is actually exact
        assert np.array_equal(Pp, P[np.ix_(perm, perm)])
        assert np.array_equal(apply_operator(Pp, X[perm]), apply_operator(P, X)[perm])


class TestApply:
    def test_averaging(self):
        np.testing.assert_array_equal(apply_operator(np.full((2, 2), 0.5), [[0.0], [2.0]]), [[1], [1]])

    def test_identity(self):
        X = np.random.default_rng(0).normal(size=(4, 3))
        assert np.array_equal(apply_operator(np.eye(4), X), X)

    def test_hand_trace(self):
        P = diffusion_operator([[0.0], [1.0], [10.0]], 4.0)
        np.testing.assert_allclose(apply_operator(P, [[0.0], [1.0], [10.0]])[:, 0], HAND_X1, rtol=0, atol=1e-9)

    def test_matches_matmul(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(30, 3))
        P = diffusion_operator(X, 2.0).values
        np.testing.assert_allclose(apply_operator(P, X), P @ X, rtol=0, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            apply_operator(np.eye(3), np.zeros((2, 1)))

    @settings(max_examples=50, deadline=None)
    @given(points, st.floats(0.05, 50))
    def test_bounding_box_and_constants(self, X, eps):
        X = X.copy()
        X[:, 0] = 3.25
        Y = apply_operator(diffusion_operator(X, eps), X)
        assert np.all(Y.min(axis=0) >= X.min(axis=0) - 1e-12)
        assert np.all(Y.max(axis=0) <= X.max(axis=0) + 1e-12)
        np.testing.assert_allclose(Y[:, 0], 3.25, rtol=0, atol=1e-12)


class TestGenerator:
    def test_two_points(self):
        P = np.full((2, 2), 0.5)
        L = infinitesimal_generator(P, 1.0)
        np.testing.assert_array_equal(L, [[-0.5, 0.5], [0.5, -0.5]])
        np.testing.assert_array_equal(velocity_field(P, [[0.0], [2.0]], 1.0), [[1], [-1]])

    def test_row_sums_zero(self):
        X = np.random.default_rng(2).normal(size=(9, 2))
        L = infinitesimal_generator(diffusion_operator(X, 0.8))
        np.testing.assert_allclose(L.sum(axis=1), 0, atol=1e-12)

    def test_requires_epsilon_for_plain_matrix(self):
        with pytest.raises(ValueError):
            infinitesimal_generator(np.eye(2))
