"""Kernel, Markov normalization and generator construction.

Every reduction over points (degree row sums, ``P @ X``) sorts its terms
before summing, so results depend only on the multiset of terms and not on
the order of the points.  This makes operator construction exactly
permutation-equivariant and makes duplicate rows bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

OperatorKind = Literal["anisotropic", "homogeneous"]


def canonical_sum(terms: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sum along ``axis`` in sorted order (order-independent, deterministic)."""
    return np.sum(np.sort(terms, axis=axis), axis=axis)


def as_data_matrix(X, name: str = "X") -> np.ndarray:
    """Validate and return ``X`` as a float64 ``(N, M)`` array with N >= 2."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {X.shape}")
    n, m = X.shape
    if n < 2 or m < 1:
        raise ValueError(f"{name} needs at least 2 rows and 1 column, got {X.shape}")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ValueError(f"{name} has non-finite values in row {row}: {X[row].tolist()}")
    return X


def euclidean_distances(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


DistanceFn = Callable[[np.ndarray], np.ndarray]
METRICS: dict[str, DistanceFn] = {"euclidean": euclidean_distances}


def pairwise_distances(X, metric: str | DistanceFn = "euclidean") -> np.ndarray:
    """Full ``N x N`` distance matrix between the rows of ``X``.

    Differences are formed explicitly per pair (no Gram-matrix shortcut), so
    the result is exactly symmetric with an exactly zero diagonal.
    """
    X = as_data_matrix(X)
    fn = METRICS[metric] if isinstance(metric, str) else metric
    return fn(X)


@dataclass(frozen=True)
class AffinityMatrix:
    values: np.ndarray
    epsilon: float


def gaussian_affinity(D: np.ndarray, epsilon: float) -> AffinityMatrix:
    """Gaussian kernel ``exp(-D**2 / epsilon)``."""
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ValueError(f"epsilon must be a positive finite number, got {epsilon}")
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    return AffinityMatrix(np.exp(-(D * D) / epsilon), float(epsilon))


@dataclass(frozen=True)
class DiffusionOperator:
    """Row-stochastic Markov matrix together with its construction data.

    ``degrees`` is the row-sum diagonal of the affinity matrix (``Q``).
    ``norm`` holds the row sums of the matrix that was row-normalized to
    produce ``values``; it is what conjugates ``values`` to symmetric form.
    """

    values: np.ndarray
    epsilon: float
    kind: OperatorKind
    degrees: np.ndarray
    norm: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def symmetric_conjugate(self) -> np.ndarray:
        """``norm^(1/2) P norm^(-1/2)``, symmetric with the eigenvalues of ``P``."""
        s = np.sqrt(self.norm)
        S = self.values * s[:, None] / s[None, :]
        return 0.5 * (S + S.T)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of ``P`` in descending order, via the symmetric conjugate."""
        return np.linalg.eigvalsh(self.symmetric_conjugate())[::-1]


def markov_normalize(A: AffinityMatrix, kind: OperatorKind = "anisotropic") -> DiffusionOperator:
    """Turn an affinity matrix into a diffusion operator.

    ``homogeneous`` is the plain random walk ``D^-1 A``.  ``anisotropic``
    first divides out the degrees on both sides, ``K = Q^-1 A Q^-1``, and
    then row-normalizes ``K``.
    """
    values = A.values
    degrees = canonical_sum(values, axis=1)
    if kind == "homogeneous":
        K = values
        norm = degrees
    elif kind == "anisotropic":
        K = values / np.outer(degrees, degrees)
        norm = canonical_sum(K, axis=1)
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    P = K / norm[:, None]
    return DiffusionOperator(P, A.epsilon, kind, degrees, norm)


def diffusion_operator(
    X, epsilon: float, kind: OperatorKind = "anisotropic", metric: str | DistanceFn = "euclidean"
) -> DiffusionOperator:
    """Distances, Gaussian affinity and Markov normalization in one call."""
    return markov_normalize(gaussian_affinity(pairwise_distances(X, metric), epsilon), kind)


def _matrix(P) -> np.ndarray:
    return P.values if isinstance(P, DiffusionOperator) else np.asarray(P, dtype=np.float64)


def apply_operator(P, X) -> np.ndarray:
    """``P @ X`` with order-independent summation over points."""
    Pm = _matrix(P)
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    if Pm.ndim != 2 or Pm.shape[1] != X.shape[0]:
        raise ValueError(f"dimension mismatch: operator {Pm.shape} vs data {X.shape}")
    # terms[i, k, j] = P[i, j] * X[j, k]
    terms = Pm[:, None, :] * X.T[None, :, :]
    out = canonical_sum(terms, axis=-1)
    return out[:, 0] if squeeze else out


def infinitesimal_generator(P, epsilon: float | None = None) -> np.ndarray:
    """``(P - I) / epsilon``; ``epsilon`` defaults to the operator's own."""
    Pm = _matrix(P)
    if epsilon is None:
        if not isinstance(P, DiffusionOperator):
            raise ValueError("epsilon is required when P is a plain matrix")
        epsilon = P.epsilon
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return (Pm - np.eye(Pm.shape[0])) / epsilon


def velocity_field(P, X, epsilon: float | None = None) -> np.ndarray:
    """Per-point displacement rate ``L @ X`` of the condensation flow."""
    L = infinitesimal_generator(P, epsilon)
    return apply_operator(L, X)
