"""The condensation loop.

Control flow follows the reference pseudocode literally: an outer loop over
bandwidth epochs and an inner loop that repeats condensation steps until the
degree vector stops changing.  ``i`` counts iterations globally and is never
reset; an epoch that converges after a single step ends the run.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict
from typing import Literal, Union

import numpy as np

from .operators import (
    as_data_matrix,
    apply_operator,
    gaussian_affinity,
    markov_normalize,
    pairwise_distances,
)

log = logging.getLogger(__name__)

HaltReason = Literal["outer-loop-converged", "single-cluster", "max-iterations"]


class NonFiniteError(RuntimeError):
    """Coordinates became NaN/Inf during a run."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite coordinates at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class CondensationConfig:
    epsilon0: Union[float, Literal["auto", "nn"]] = "auto"
    nn_scale: float = 4.0
    merge_threshold: float = 1e-3
    merge_mode: Literal["absolute", "relative"] = "absolute"
    qdiff_threshold: float = 1e-4
    epsilon_growth: float = 2.0
    max_iterations: int = 1000
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.epsilon0 not in ("auto", "nn"):
            if isinstance(self.epsilon0, str) or not np.isfinite(self.epsilon0) or self.epsilon0 <= 0:
                raise ValueError(f"epsilon0 must be 'auto', 'nn' or a positive number, got {self.epsilon0!r}")
        if not self.nn_scale > 0:
            raise ValueError("nn_scale must be positive")
        if not self.merge_threshold > 0:
            raise ValueError("merge_threshold must be positive")
        if not self.qdiff_threshold > 0:
            raise ValueError("qdiff_threshold must be positive")
        if not self.epsilon_growth > 1:
            raise ValueError("epsilon_growth must be > 1")
        if self.merge_mode not in ("absolute", "relative"):
            raise ValueError(f"unknown merge_mode {self.merge_mode!r}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MergeEvent:
    iteration: int
    absorbed_label: int
    surviving_label: int
    member_count_after: int


class UnionFind:
    """Disjoint sets over ``0..n-1`` whose representative is the smallest member."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> tuple[int, int] | None:
        """Join the sets of ``a`` and ``b``; return ``(absorbed, surviving)`` or None."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return None
        keep, drop = (ra, rb) if ra < rb else (rb, ra)
        self.parent[drop] = keep
        self.size[keep] += self.size[drop]
        return drop, keep

    def labels(self) -> np.ndarray:
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)

    @classmethod
    def from_labels(cls, labels) -> "UnionFind":
        labels = np.asarray(labels)
        uf = cls(len(labels))
        for i, lab in enumerate(labels):
            lab = int(lab)
            if lab != i:
                if labels[lab] != lab or lab > i:
                    raise ValueError("labels must map each point to the smallest member of its cluster")
                uf.parent[i] = lab
                uf.size[lab] += 1
        return uf


@dataclass
class CondensationTrace:
    """Complete record of a condensation run.

    ``labels_per_iteration[t]`` is the partition after the merge check of
    iteration ``t`` (index 0 is the initial all-singleton partition).
    ``snapshots`` hold ``(t, X(t))`` where ``X(t)`` is the data after ``t``
    steps.  ``epsilon_schedule`` and ``degree_log`` hold the bandwidth and
    degree diagonal used by iteration ``t`` (``t >= 1``), whose operator was
    built from ``X(t - 1)``.
    """

    config: CondensationConfig
    epsilon0: float
    merge_threshold: float
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)
    epsilon_schedule: list[tuple[int, float]] = field(default_factory=list)
    degree_log: list[tuple[int, np.ndarray]] = field(default_factory=list)
    qdiff_log: list[tuple[int, float]] = field(default_factory=list)
    merge_log: list[MergeEvent] = field(default_factory=list)
    labels_per_iteration: list[np.ndarray] = field(default_factory=list)
    halt_reason: HaltReason | None = None

    @property
    def n_points(self) -> int:
        return len(self.labels_per_iteration[0])

    @property
    def n_iterations(self) -> int:
        return len(self.labels_per_iteration) - 1

    @property
    def final_labels(self) -> np.ndarray:
        return self.labels_per_iteration[-1]

    def cluster_counts(self) -> np.ndarray:
        return np.array([len(np.unique(lab)) for lab in self.labels_per_iteration])

    def snapshot(self, t: int) -> np.ndarray:
        for it, X in self.snapshots:
            if it == t:
                return X
        raise KeyError(f"no snapshot stored for iteration {t}")

    def epsilon_at(self, t: int) -> float:
        """Bandwidth used by iteration ``t`` (1-based)."""
        it, eps = self.epsilon_schedule[t - 1]
        assert it == t
        return eps

    def first_merge_iteration(self) -> np.ndarray:
        """Per point, the first iteration at which it shares a label with another point.

        Points that never merge get ``n_iterations + 1``.
        """
        labels = np.vstack(self.labels_per_iteration)
        n = labels.shape[1]
        first = np.full(n, self.n_iterations + 1, dtype=np.int64)
        for t in range(1, labels.shape[0]):
            counts = np.bincount(labels[t], minlength=n)
            merged = (counts[labels[t]] > 1) & (first > t)
            first[merged] = t
        return first


def auto_epsilon(X) -> float:
    """Square of the median nonzero pairwise distance."""
    X = as_data_matrix(X)
    D = pairwise_distances(X)
    d = D[np.triu_indices(len(X), k=1)]
    d = d[d > 0]
    if d.size == 0:
        raise ValueError("degenerate input: zero spread")
    return float(np.median(d) ** 2)


def nn_epsilon(X, scale: float = 4.0, ignore_below: float = 0.0) -> float:
    """``scale`` times the squared median nearest-neighbour distance.

    Much finer than :func:`auto_epsilon`; gives long multiscale runs on
    clustered data.  Pairs at distance ``<= ignore_below`` (duplicates, or
    pairs the first merge check will fuse anyway) are not neighbours.
    """
    X = as_data_matrix(X)
    D = pairwise_distances(X)
    D[D <= ignore_below] = np.inf
    nearest = D.min(axis=1)
    nearest = nearest[np.isfinite(nearest)]
    if nearest.size == 0:
        raise ValueError("degenerate input: zero spread")
    return float(scale * np.median(nearest) ** 2)


def resolve_epsilon(X, cfg: CondensationConfig, merge_threshold: float = 0.0) -> float:
    """Numeric starting bandwidth for ``cfg``.

    Data-driven modes fall back to 1.0 when every point coincides; the
    bandwidth is irrelevant there since all affinities are 1.
    """
    if cfg.epsilon0 not in ("auto", "nn"):
        return float(cfg.epsilon0)
    try:
        if cfg.epsilon0 == "auto":
            return auto_epsilon(X)
        return nn_epsilon(X, cfg.nn_scale, ignore_below=merge_threshold)
    except ValueError:
        log.warning("all points coincide; using epsilon = 1")
        return 1.0


def merge_close_pairs(D: np.ndarray, uf: UnionFind, threshold: float, iteration: int) -> list[MergeEvent]:
    """Union every pair closer than ``threshold``; pairs visited in (i, j) order."""
    ii, jj = np.nonzero(np.triu(D < threshold, k=1))
    events = []
    for i, j in zip(ii.tolist(), jj.tolist()):
        res = uf.union(i, j)
        if res is not None:
            drop, keep = res
            events.append(MergeEvent(iteration, drop, keep, uf.size[keep]))
    return events


def condense_step(
    X,
    epsilon: float,
    labels,
    merge_threshold: float = 1e-3,
    iteration: int = 1,
    uf: UnionFind | None = None,
):
    """One inner-loop pass: distances, merge, operator, ``P @ X``.

    Returns ``(X_next, degrees, events, labels_next)``.  ``uf`` may be passed
    to keep union-find state across calls; otherwise it is rebuilt from
    ``labels``.
    """
    X = as_data_matrix(X)
    if uf is None:
        uf = UnionFind.from_labels(labels)
    D = pairwise_distances(X)
    events = merge_close_pairs(D, uf, merge_threshold, iteration)
    P = markov_normalize(gaussian_affinity(D, epsilon), "anisotropic")
    return apply_operator(P, X), P.degrees, events, uf.labels()


def run(X, cfg: CondensationConfig | None = None) -> CondensationTrace:
    """Condense ``X`` until the outer loop stalls, one cluster remains, or the budget runs out."""
    cfg = cfg or CondensationConfig()
    X = as_data_matrix(X).copy()
    n = X.shape[0]
    threshold = cfg.merge_threshold
    if cfg.merge_mode == "relative":
        D0 = pairwise_distances(X)
        threshold = cfg.merge_threshold * float(np.median(D0[np.triu_indices(n, k=1)]))
    eps = resolve_epsilon(X, cfg, threshold)

    trace = CondensationTrace(config=cfg, epsilon0=eps, merge_threshold=threshold)
    uf = UnionFind(n)
    trace.labels_per_iteration.append(uf.labels())
    trace.snapshots.append((0, X.copy()))

    i, i_prev = 0, -2
    q_prev = np.ones(n)
    n_clusters = n
    halt: HaltReason | None = None
    while halt is None and i - i_prev > 1:
        i_prev = i
        q_diff = np.inf
        while q_diff >= cfg.qdiff_threshold:
            if i >= cfg.max_iterations:
                halt = "max-iterations"
                break
            i += 1
            D = pairwise_distances(X)
            events = merge_close_pairs(D, uf, threshold, i)
            P = markov_normalize(gaussian_affinity(D, eps), "anisotropic")
            X = apply_operator(P, X)
            if not np.isfinite(X).all():
                raise NonFiniteError(i)
            q = P.degrees
            q_diff = float(np.max(np.abs(q - q_prev)))
            q_prev = q

            trace.merge_log.extend(events)
            n_clusters -= len(events)
            trace.labels_per_iteration.append(uf.labels())
            trace.epsilon_schedule.append((i, eps))
            trace.degree_log.append((i, q))
            trace.qdiff_log.append((i, q_diff))
            if i % cfg.snapshot_stride == 0:
                trace.snapshots.append((i, X.copy()))
            if n_clusters == 1:
                halt = "single-cluster"
                break
        if halt is None:
            eps *= cfg.epsilon_growth
            log.debug("iteration %d: epoch converged, epsilon -> %g", i, eps)
    if halt is None:
        halt = "outer-loop-converged"
    if trace.snapshots[-1][0] != i:
        trace.snapshots.append((i, X.copy()))
    trace.halt_reason = halt
    return trace
