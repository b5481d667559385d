"""Cluster trees, persistence, Sankey exports and partition agreement."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .engine import CondensationTrace


@dataclass
class ClusterNode:
    id: int
    label: int
    birth: int
    death: int
    members: frozenset[int]
    children: tuple[int, ...] = ()
    parent: int | None = None

    @property
    def persistence(self) -> int:
        return self.death - self.birth

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ClusterTree:
    """Forest of merge events.

    Leaves ``0..N-1`` are the original points, born at iteration 0.  A node
    dies at the iteration in which it is merged into a parent; nodes that
    survive to the end of the run get ``death = final_iteration`` and
    ``parent = None`` (these are the roots).
    """

    nodes: list[ClusterNode]
    n_points: int
    final_iteration: int
    epsilon_by_iteration: dict[int, float] = field(default_factory=dict)

    @property
    def roots(self) -> list[int]:
        return [nd.id for nd in self.nodes if nd.parent is None]

    @property
    def root(self) -> int | None:
        """Id of the single surviving cluster, or None for a forest."""
        roots = self.roots
        return roots[0] if len(roots) == 1 else None

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(nd.id, nd.parent) for nd in self.nodes if nd.parent is not None]

    def alive(self, nd: ClusterNode, t: int) -> bool:
        return nd.birth <= t and (t < nd.death or nd.parent is None)

    def path_to_root(self, node_id: int) -> list[int]:
        path = [node_id]
        while self.nodes[path[-1]].parent is not None:
            path.append(self.nodes[path[-1]].parent)
        return path

    def persistence(self, node_id: int, weight: str = "iterations") -> float:
        """Lifetime of a node, in iterations or as summed bandwidth over its iterations."""
        nd = self.nodes[node_id]
        if weight == "iterations":
            return float(nd.persistence)
        if weight == "epsilon":
            return float(sum(self.epsilon_by_iteration[s] for s in range(nd.birth + 1, nd.death + 1)))
        raise ValueError(f"unknown weight {weight!r}")


def build_tree(trace: CondensationTrace) -> ClusterTree:
    """Build the merge forest from the per-iteration label log."""
    labels_log = trace.labels_per_iteration
    n = len(labels_log[0])
    final = len(labels_log) - 1
    nodes = [ClusterNode(i, i, 0, final, frozenset([i])) for i in range(n)]
    alive = {i: i for i in range(n)}  # label -> node id
    for t in range(1, final + 1):
        labels = labels_log[t]
        groups: dict[int, list[int]] = {}
        for lab, nid in alive.items():
            groups.setdefault(int(labels[lab]), []).append(nid)
        for new_label in sorted(groups):
            kids = groups[new_label]
            if len(kids) == 1:
                if nodes[kids[0]].label != new_label:
                    raise ValueError(f"label log relabels a cluster without merging at iteration {t}")
                continue
            kids.sort()
            pid = len(nodes)
            members = frozenset().union(*(nodes[k].members for k in kids))
            nodes.append(ClusterNode(pid, new_label, t, final, members, tuple(kids)))
            for k in kids:
                nodes[k].death = t
                nodes[k].parent = pid
                del alive[nodes[k].label]
            alive[new_label] = pid
    eps = {it: e for it, e in trace.epsilon_schedule}
    return ClusterTree(nodes, n, final, eps)


def cut_at(tree: ClusterTree, t: int) -> np.ndarray:
    """Labels of the clusters alive at iteration ``t`` (clamped to the run)."""
    if t < 0:
        raise ValueError(f"iteration must be >= 0, got {t}")
    t = min(t, tree.final_iteration)
    out = np.full(tree.n_points, -1, dtype=np.int64)
    for nd in tree.nodes:
        if tree.alive(nd, t):
            out[list(nd.members)] = nd.label
    return out


def persistence_table(tree: ClusterTree, weight: str = "iterations") -> list[dict]:
    rows = [
        {
            "cluster_id": nd.id,
            "birth": nd.birth,
            "death": nd.death,
            "persistence": tree.persistence(nd.id, weight),
            "size": len(nd.members),
        }
        for nd in tree.nodes
    ]
    rows.sort(key=lambda r: (-r["persistence"], r["cluster_id"]))
    return rows


def persistence_csv(tree: ClusterTree, weight: str = "iterations") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cluster_id", "birth", "death", "persistence", "size"])
    for r in persistence_table(tree, weight):
        p = r["persistence"]
        w.writerow([r["cluster_id"], r["birth"], r["death"], int(p) if weight == "iterations" else repr(p), r["size"]])
    return buf.getvalue()


def sankey_export(tree: ClusterTree, from_t: int, to_t: int) -> dict:
    """Per-iteration cluster nodes and the flows between consecutive iterations.

    A link ``{"t": t, "src": a, "dst": b, "flow": f}`` carries the ``f``
    members of cluster ``a`` at iteration ``t`` into cluster ``b`` at
    ``t + 1``.
    """
    if from_t > to_t:
        raise ValueError(f"empty range: from {from_t} > to {to_t}")
    if from_t < 0 or to_t > tree.final_iteration:
        raise ValueError(f"range [{from_t}, {to_t}] outside the trace; valid range is [0, {tree.final_iteration}]")
    cuts = {t: cut_at(tree, t) for t in range(from_t, to_t + 1)}
    iterations = []
    for t, lab in cuts.items():
        ids, sizes = np.unique(lab, return_counts=True)
        iterations.append({"t": t, "nodes": [{"id": int(i), "size": int(s)} for i, s in zip(ids, sizes)]})
    links = []
    for t in range(from_t, to_t):
        a, b = cuts[t], cuts[t + 1]
        pairs, flows = np.unique(np.column_stack([a, b]), axis=0, return_counts=True)
        links.extend(
            {"t": t, "src": int(s), "dst": int(d), "flow": int(f)} for (s, d), f in zip(pairs, flows)
        )
    return {"iterations": iterations, "links": links}


def check_sankey_mass(doc: dict) -> bool:
    """Outflow of every node and inflow of every later node equal its size."""
    sizes = {(it["t"], nd["id"]): nd["size"] for it in doc["iterations"] for nd in it["nodes"]}
    ts = [it["t"] for it in doc["iterations"]]
    out_flow: dict = {}
    in_flow: dict = {}
    for ln in doc["links"]:
        out_flow[(ln["t"], ln["src"])] = out_flow.get((ln["t"], ln["src"]), 0) + ln["flow"]
        in_flow[(ln["t"] + 1, ln["dst"])] = in_flow.get((ln["t"] + 1, ln["dst"]), 0) + ln["flow"]
    for (t, i), size in sizes.items():
        if t != ts[-1] and out_flow.get((t, i)) != size:
            return False
        if t != ts[0] and in_flow.get((t, i)) != size:
            return False
    return True


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Adjusted Rand index from the contingency table."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"label vectors must be 1-D of equal length, got {a.shape} and {b.shape}")
    n = len(a)
    if n < 2:
        raise ValueError("need at least 2 labels")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    index = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both partitions all-singletons or both a single cluster
        return 1.0
    return float((index - expected) / (max_index - expected))


def mean_ari_over_range(trace_a: CondensationTrace, trace_b: CondensationTrace, t0: int, t1: int) -> float:
    """Mean per-iteration ARI between two runs over iterations ``t0..t1`` inclusive."""
    la, lb = trace_a.labels_per_iteration, trace_b.labels_per_iteration
    if len(la[0]) != len(lb[0]):
        raise ValueError(f"traces have different point counts: {len(la[0])} vs {len(lb[0])}")
    if not 0 <= t0 <= t1:
        raise ValueError(f"invalid range [{t0}, {t1}]")
    last = min(len(la), len(lb)) - 1
    if t1 > last:
        raise ValueError(f"range [{t0}, {t1}] not covered; both traces cover [0, {last}]")
    return float(np.mean([adjusted_rand_index(la[t], lb[t]) for t in range(t0, t1 + 1)]))
