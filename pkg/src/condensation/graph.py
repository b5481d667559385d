"""Adjacency ingestion and spectral coordinates for graph data."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class AdjacencyMatrix:
    values: np.ndarray
    node_names: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("adjacency has non-finite entries")
        if (v < 0).any():
            raise ValueError("adjacency has negative entries")
        if self.node_names is not None and len(self.node_names) != v.shape[0]:
            raise ValueError(f"{len(self.node_names)} names for {v.shape[0]} nodes")

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    def symmetrized(self) -> np.ndarray:
        return 0.5 * (self.values + self.values.T)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip each column so its first entry that is clearly nonzero is positive."""
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        tol = 1e-12 * max(np.abs(col).max(), 1.0)
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size and col[nz[0]] < 0:
            vecs[:, j] = -col
    return vecs


def spectral_decomposition(adj: AdjacencyMatrix | np.ndarray, d: int, laplacian: bool = False):
    """Top-``d`` eigenpairs of the symmetrized adjacency (or its Laplacian).

    Adjacency mode keeps the largest ``|lambda|``; Laplacian mode
    (``L = D - A``) keeps the smallest eigenvalues after the first.
    Returns ``(eigenvalues, eigenvectors)`` with the sign convention applied.
    """
    if not isinstance(adj, AdjacencyMatrix):
        adj = AdjacencyMatrix(adj)
    n = adj.n_nodes
    if not 1 <= d < n:
        raise ValueError(f"d must satisfy 1 <= d < N = {n}, got {d}")
    A = adj.symmetrized()
    if not np.any(A):
        raise ValueError("degenerate adjacency: all entries are zero")
    if laplacian:
        M = np.diag(A.sum(axis=1)) - A
        w, V = np.linalg.eigh(M)
        order = np.argsort(w, kind="stable")[1 : d + 1]
    else:
        M = A
        w, V = np.linalg.eigh(M)
        order = np.lexsort((-w, -np.abs(w)))[:d]
    return w[order], _fix_signs(V[:, order])


def spectral_coordinates(
    adj: AdjacencyMatrix | np.ndarray, d: int = 10, scale: bool = True, laplacian: bool = False
) -> np.ndarray:
    """Eigenvectors of the graph as point coordinates, one row per node.

    With ``scale`` each adjacency eigenvector is multiplied by its eigenvalue;
    Laplacian eigenvectors are left unscaled.
    """
    w, V = spectral_decomposition(adj, d, laplacian)
    if scale and not laplacian:
        V = V * w[None, :]
    return V


def load_adjacency(path) -> AdjacencyMatrix:
    """Read a square adjacency CSV, with an optional header row and name column.

    A header row is detected when its cells are not numbers; a name column
    when the first cell of every data row is not a number.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty file")

    def numeric(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    header = None
    if not all(numeric(c) for c in rows[0] if c.strip()):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    row_names = None
    if rows and not all(numeric(r[0]) for r in rows):
        row_names = [r[0].strip() for r in rows]
        rows = [r[1:] for r in rows]
        if header is not None and len(header) == len(rows[0]) + 1:
            header = header[1:]
    n = len(rows)
    for i, r in enumerate(rows):
        if len(r) != n:
            raise ValueError(f"{path}: adjacency is not square: row {i + 1} has {len(r)} entries, expected {n}")
    try:
        values = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    names = row_names or header
    if not np.allclose(values, values.T, rtol=0, atol=0):
        log.warning("%s: adjacency is not symmetric; it will be symmetrized as (A + A^T)/2", path)
    return AdjacencyMatrix(values, names)


def save_adjacency(path, adj: AdjacencyMatrix) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if adj.node_names is not None:
            w.writerow([""] + list(adj.node_names))
        for i, row in enumerate(adj.values):
            cells = [repr(float(v)) for v in row]
            if adj.node_names is not None:
                cells = [adj.node_names[i]] + cells
            w.writerow(cells)
