"""Reference clusterers and the early/late condensation comparison."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .datasets import LabeledDataset
from .engine import CondensationConfig, run
from .hierarchy import adjusted_rand_index, build_tree, cut_at
from .operators import as_data_matrix

Linkage = Literal["ward", "average"]


@dataclass
class BaselineResult:
    method: str
    labels: np.ndarray
    params: dict = field(default_factory=dict)
    inertia: float | None = None
    history: list[float] = field(default_factory=list)
    merge_heights: list[float] = field(default_factory=list)

    @property
    def n_clusters(self) -> int:
        return len(np.unique(self.labels))


def _sq_dists(X, C):
    diff = X[:, None, :] - C[None, :, :]
    return np.sum(diff * diff, axis=-1)


def _kmeans_pp(X, k, rng):
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = _sq_dists(X, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total == 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.uniform(0, total), side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, _sq_dists(X, X[idx : idx + 1])[:, 0])
    return np.array(centers)


def kmeans(
    X,
    k: int,
    seed: int = 0,
    minibatch: bool = False,
    batch_size: int = 100,
    max_iter: int = 300,
) -> BaselineResult:
    """k-means++ seeding followed by Lloyd iterations (or mini-batch updates).

    Lloyd stops at an assignment fixpoint; mini-batch runs ``max_iter``
    batches with per-center learning rates ``1 / count`` and then assigns
    every point to its nearest center.
    """
    X = as_data_matrix(X)
    n = len(X)
    if not 2 <= k <= n:
        raise ValueError(f"k must satisfy 2 <= k <= N = {n}, got {k}")
    rng = np.random.Generator(np.random.PCG64(seed))
    C = _kmeans_pp(X, k, rng)
    history = []
    if not minibatch:
        labels = None
        for _ in range(max_iter):
            new = np.argmin(_sq_dists(X, C), axis=1)
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for j in range(k):
                members = X[labels == j]
                if len(members):
                    C[j] = members.mean(axis=0)
            history.append(float(np.sum((X - C[labels]) ** 2)))
    else:
        counts = np.zeros(k)
        b = min(batch_size, n)
        for _ in range(max_iter):
            batch = X[rng.choice(n, size=b, replace=False)]
            nearest = np.argmin(_sq_dists(batch, C), axis=1)
            for x, j in zip(batch, nearest):
                counts[j] += 1
                C[j] += (x - C[j]) / counts[j]
        labels = np.argmin(_sq_dists(X, C), axis=1)
        history.append(float(np.sum((X - C[labels]) ** 2)))
    labels = np.argmin(_sq_dists(X, C), axis=1)
    inertia = float(np.sum((X - C[labels]) ** 2))
    method = "minibatch-kmeans" if minibatch else "kmeans"
    return BaselineResult(method, labels, {"k": k, "seed": seed, "batch_size": batch_size if minibatch else None},
                          inertia, history)


def agglomerative(X, n_clusters: int, linkage: Linkage = "ward") -> BaselineResult:
    """Greedy agglomeration with Lance-Williams updates.

    Ward heights are ``sqrt(2 * increase in within-cluster sum of squares)``
    (the usual dendrogram convention); average heights are mean pairwise
    Euclidean distances.  Ties go to the lexicographically smallest pair of
    cluster ids; the merged cluster keeps the smaller id.
    """
    X = as_data_matrix(X)
    n = len(X)
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must satisfy 1 <= n_clusters <= N = {n}, got {n_clusters}")
    if linkage not in ("ward", "average"):
        raise ValueError(f"unknown linkage {linkage!r}")
    diff = X[:, None, :] - X[None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=-1))
    if linkage == "ward":
        D = D * D  # Lance-Williams for ward operates on squared distances
    D[np.diag_indices(n)] = np.inf
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    labels = np.arange(n)
    heights = []
    for _ in range(n - n_clusters):
        flat = np.argmin(D)  # row-major: first minimum is the smallest (i, j)
        i, j = divmod(int(flat), n)
        if i > j:
            i, j = j, i
        h = D[i, j]
        heights.append(float(np.sqrt(h)) if linkage == "ward" else float(h))
        ni, nj = size[i], size[j]
        if linkage == "average":
            new = (ni * D[i] + nj * D[j]) / (ni + nj)
        else:
            nk = size
            new = ((ni + nk) * D[i] + (nj + nk) * D[j] - nk * h) / (ni + nj + nk)
        new[~active] = np.inf
        D[i, :] = new
        D[:, i] = new
        D[i, i] = np.inf
        D[j, :] = np.inf
        D[:, j] = np.inf
        active[j] = False
        size[i] = ni + nj
        labels[labels == j] = i
    _, labels = np.unique(labels, return_inverse=True)
    return BaselineResult(linkage, labels, {"n_clusters": n_clusters}, merge_heights=heights)


@dataclass(frozen=True)
class CompareConfig:
    condensation: CondensationConfig = CondensationConfig(epsilon0="nn")
    seed: int = 0
    batch_size: int = 100


def compare(dataset: LabeledDataset, cfg: CompareConfig | None = None) -> dict:
    """Early/late condensation labels against the reference clusterers.

    Late is the final iteration ``T`` of the run, early is ``T // 2``.  The
    baselines are asked for as many clusters as the late condensation found
    (at least 2 for k-means).
    """
    cfg = cfg or CompareConfig()
    X = dataset.data
    trace = run(X, cfg.condensation)
    tree = build_tree(trace)
    T = trace.n_iterations
    early, late = cut_at(tree, T // 2), cut_at(tree, T)
    k = len(np.unique(late))
    methods = {
        "condensation-early": (early, {"iteration": T // 2}),
        "condensation-late": (late, {"iteration": T}),
    }
    km_k = min(max(k, 2), len(X))
    for res in (
        kmeans(X, km_k, seed=cfg.seed),
        kmeans(X, km_k, seed=cfg.seed, minibatch=True, batch_size=cfg.batch_size),
        agglomerative(X, k, "ward"),
        agglomerative(X, k, "average"),
    ):
        methods[res.method] = (res.labels, res.params)
    report = {
        "dataset": dataset.descriptor,
        "n_points": int(len(X)),
        "condensation": {
            "config": cfg.condensation.to_dict(),
            "epsilon0": trace.epsilon0,
            "n_iterations": T,
            "halt_reason": trace.halt_reason,
            "cluster_counts": trace.cluster_counts().tolist(),
        },
        "methods": {},
    }
    for name, (labels, params) in methods.items():
        entry = {
            "labels": [int(v) for v in labels],
            "n_clusters": int(len(np.unique(labels))),
            "params": params,
        }
        if dataset.labels is not None:
            entry["ari"] = adjusted_rand_index(dataset.labels, labels)
        report["methods"][name] = entry
    if dataset.labels is not None:
        aris = [adjusted_rand_index(dataset.labels, lab) for lab in trace.labels_per_iteration]
        report["condensation"]["ari_per_iteration"] = aris
    return report
