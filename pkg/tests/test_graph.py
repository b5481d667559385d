import logging

import numpy as np
import pytest

from condensation.engine import CondensationConfig, run
from condensation.graph import (
    AdjacencyMatrix,
    load_adjacency,
    save_adjacency,
    spectral_coordinates,
    spectral_decomposition,
)


def two_cliques(k=5):
    A = np.zeros((2 * k, 2 * k))
    A[:k, :k] = 1
    A[k:, k:] = 1
    np.fill_diagonal(A, 0)
    return A


def random_graph(n=12, seed=0):
    rng = np.random.default_rng(seed)
    W = rng.uniform(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.6)
    return np.triu(W, 1) + np.triu(W, 1).T


class TestDecomposition:
    def test_residuals(self):
        A = random_graph()
        w, V = spectral_decomposition(A, 6)
        for lam, v in zip(w, V.T):
            assert np.max(np.abs(A @ v - lam * v)) < 1e-8
        assert np.all(np.diff(np.abs(w)) <= 1e-12)

    def test_laplacian_mode(self):
        A = random_graph(seed=1)
        L = np.diag(A.sum(axis=1)) - A
        w, V = spectral_decomposition(A, 3, laplacian=True)
        np.testing.assert_allclose(w, np.sort(np.linalg.eigvalsh(L))[1:4], atol=1e-10)
        for lam, v in zip(w, V.T):
            assert np.max(np.abs(L @ v - lam * v)) < 1e-8

    def test_sign_convention(self):
        _, V = spectral_decomposition(random_graph(seed=2), 4)
        for v in V.T:
            first = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
            assert first > 0

    def test_asymmetric_symmetrized(self):
        A = random_graph(seed=3)
        B = A.copy()
        B[0, 1] += 0.4
        B[1, 0] -= 0.4 if B[1, 0] >= 0.4 else 0.0
        w, _ = spectral_decomposition(B, 3)
        Bs = 0.5 * (B + B.T)
        ref = np.linalg.eigvalsh(Bs)
        ref = ref[np.argsort(-np.abs(ref))][:3]
        np.testing.assert_allclose(np.abs(w), np.abs(ref), atol=1e-10)

    def test_zero_matrix(self):
        with pytest.raises(ValueError, match="degenerate"):
            spectral_decomposition(np.zeros((4, 4)), 2)

    @pytest.mark.parametrize("d", [0, 4])
    def test_d_range(self, d):
        with pytest.raises(ValueError):
            spectral_decomposition(np.ones((4, 4)), d)

    def test_invalid_adjacency(self):
        with pytest.raises(ValueError):
            AdjacencyMatrix(np.ones((2, 3)))
        with pytest.raises(ValueError):
            AdjacencyMatrix(-np.ones((2, 2)))

    def test_reorder_invariance(self):
        A = random_graph(seed=4)
        perm = np.random.default_rng(5).permutation(len(A))
        C = spectral_coordinates(A, 4)
        Cp = spectral_coordinates(A[np.ix_(perm, perm)], 4)
        # equal up to the per-axis sign, which depends on which node comes first
        signs = np.sign(np.sum(C[perm] * Cp, axis=0))
        np.testing.assert_allclose(C[perm] * signs, Cp, atol=1e-9)


class TestCliques:
    def test_coordinates_separate(self):
        C = spectral_coordinates(two_cliques(), 2)
        a, b = C[:5], C[5:]
        np.testing.assert_allclose(a, np.broadcast_to(a[0], a.shape), atol=1e-10)
        np.testing.assert_allclose(b, np.broadcast_to(b[0], b.shape), atol=1e-10)
        assert np.linalg.norm(a[0] - b[0]) > 1

    @pytest.mark.parametrize("d", [2, 3, 5, 9])
    def test_within_before_across(self, d):
        C = spectral_coordinates(two_cliques(), d)
        tr = run(C, CondensationConfig(epsilon0="nn"))
        side = np.arange(10) < 5
        within = across = None
        for t, lab in enumerate(tr.labels_per_iteration):
            same = lab[:, None] == lab[None, :]
            if across is None and np.any(same & (side[:, None] != side[None, :])):
                across = t
            if within is None and all(len(np.unique(lab[s])) == 1 for s in (side, ~side)):
                within = t
        assert within is not None
        assert across is None or within < across


class TestIo:
    def test_plain(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("0,1,0\n1,0,2\n0,2,0\n")
        adj = load_adjacency(p)
        assert adj.values.tolist() == [[0, 1, 0], [1, 0, 2], [0, 2, 0]]
        assert adj.node_names is None

    def test_names(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text(",a,b\na,0,1\nb,1,0\n")
        adj = load_adjacency(p)
        assert adj.node_names == ["a", "b"]
        assert adj.values.tolist() == [[0, 1], [1, 0]]

    def test_not_square(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("0,1\n1,0\n1,1\n")
        with pytest.raises(ValueError, match="not square"):
            load_adjacency(p)

    def test_asymmetric_warns(self, tmp_path, caplog):
        p = tmp_path / "a.csv"
        p.write_text("0,1\n0,0\n")
        with caplog.at_level(logging.WARNING):
            load_adjacency(p)
        assert "not symmetric" in caplog.text

    def test_round_trip(self, tmp_path):
        A = random_graph(seed=6)
        adj = AdjacencyMatrix(A, [f"n{i}" for i in range(len(A))])
        p = tmp_path / "r.csv"
        save_adjacency(p, adj)
        back = load_adjacency(p)
        assert np.array_equal(back.values, A)
        assert back.node_names == adj.node_names
