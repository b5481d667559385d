"""Deterministic synthetic datasets and CSV ingestion.

Random generators use numpy's PCG64 bit generator seeded with the integer
seed, so a ``(generator, params, seed)`` descriptor regenerates the data
bit-identically.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


@dataclass
class LabeledDataset:
    data: np.ndarray
    labels: np.ndarray | None = None
    descriptor: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != len(self.data):
                raise ValueError(f"{len(self.labels)} labels for {len(self.data)} points")

    @property
    def n_points(self) -> int:
        return self.data.shape[0]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _descriptor(name: str, **params) -> dict[str, Any]:
    return {"generator": name, "params": params}


def hyperuniform_circle(n: int = 64, radius: float = 1.0) -> LabeledDataset:
    """``n`` points at equally spaced angles ``2*pi*i/n``."""
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    theta = 2 * np.pi * np.arange(n) / n
    data = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    return LabeledDataset(data, None, _descriptor("hyperuniform-circle", n=n, radius=radius))


def uniform_circle(n: int = 64, radius: float = 1.0, seed: int = 0) -> LabeledDataset:
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    theta = _rng(seed).uniform(0.0, 2 * np.pi, size=n)
    data = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    return LabeledDataset(data, None, _descriptor("uniform-circle", n=n, radius=radius, seed=seed))


def ellipse_arc_length(a: float, b: float, n_samples: int = 100_000):
    """Parameter grid on ``[0, 2*pi]`` and cumulative arc length (trapezoid rule)."""
    s = np.linspace(0.0, 2 * np.pi, n_samples + 1)
    speed = np.hypot(a * np.sin(s), b * np.cos(s))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(s))])
    return s, cum


def hyperuniform_ellipse(n: int = 64, a: float = 2.0, b: float = 1.0, n_samples: int = 100_000) -> LabeledDataset:
    """``n`` points equally spaced by arc length on ``x^2/a^2 + y^2/b^2 = 1``.

    The first point sits at ``(a, 0)``. Arc length is inverted by linear
    interpolation of the cumulative trapezoid integral.
    """
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    if not (a > 0 and b > 0 and a >= b):
        raise ValueError(f"need a >= b > 0, got a={a}, b={b}")
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 10000")
    s, cum = ellipse_arc_length(a, b, n_samples)
    targets = cum[-1] * np.arange(n) / n
    theta = np.interp(targets, cum, s)
    data = np.column_stack([a * np.cos(theta), b * np.sin(theta)])
    return LabeledDataset(data, None, _descriptor("hyperuniform-ellipse", n=n, a=a, b=b, n_samples=n_samples))


def noisy_circles(n: int = 300, factor: float = 0.5, noise: float = 0.05, seed: int = 0) -> LabeledDataset:
    """Two concentric circles (radii 1 and ``factor``), Gaussian jitter of std ``noise``."""
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    if not 0 < factor < 1:
        raise ValueError(f"factor must be in (0, 1), got {factor}")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0, 2 * np.pi, n_out, endpoint=False)
    t_in = np.linspace(0, 2 * np.pi, n_in, endpoint=False)
    data = np.vstack([
        np.column_stack([np.cos(t_out), np.sin(t_out)]),
        factor * np.column_stack([np.cos(t_in), np.sin(t_in)]),
    ])
    labels = np.concatenate([np.zeros(n_out, int), np.ones(n_in, int)])
    if noise > 0:
        data = data + _rng(seed).normal(scale=noise, size=data.shape)
    return LabeledDataset(data, labels, _descriptor("noisy-circles", n=n, factor=factor, noise=noise, seed=seed))


def noisy_moons(n: int = 300, noise: float = 0.05, seed: int = 0) -> LabeledDataset:
    """Two interleaved half circles of unit radius, centred at (0, 0) and (1, 0.5)."""
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0, np.pi, n_out)
    t_in = np.linspace(0, np.pi, n_in)
    data = np.vstack([
        np.column_stack([np.cos(t_out), np.sin(t_out)]),
        np.column_stack([1 - np.cos(t_in), 0.5 - np.sin(t_in)]),
    ])
    labels = np.concatenate([np.zeros(n_out, int), np.ones(n_in, int)])
    if noise > 0:
        data = data + _rng(seed).normal(scale=noise, size=data.shape)
    return LabeledDataset(data, labels, _descriptor("noisy-moons", n=n, noise=noise, seed=seed))


BLOB_CENTERS = ((-6.0, 0.0), (0.0, 6.0), (6.0, 0.0))


def blobs(n: int = 300, centers=BLOB_CENTERS, stds=(1.0, 1.5, 0.5), seed: int = 0) -> LabeledDataset:
    """Isotropic Gaussian blobs; points are split as evenly as possible, earlier blobs first."""
    centers = np.asarray(centers, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    k = len(centers)
    if n < max(4, k):
        raise ValueError(f"need n >= max(4, n_centers), got {n}")
    if len(stds) != k:
        raise ValueError(f"{len(stds)} stds for {k} centers")
    if (stds < 0).any():
        raise ValueError("stds must be nonnegative")
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    rng = _rng(seed)
    parts = [rng.normal(loc=c, scale=s, size=(m, centers.shape[1])) for c, s, m in zip(centers, stds, sizes)]
    labels = np.repeat(np.arange(k), sizes)
    return LabeledDataset(
        np.vstack(parts),
        labels,
        _descriptor("blobs", n=n, centers=centers.tolist(), stds=stds.tolist(), seed=seed),
    )


def no_structure(n: int = 300, seed: int = 0) -> LabeledDataset:
    """Uniform noise on the unit square."""
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    return LabeledDataset(_rng(seed).uniform(size=(n, 2)), None, _descriptor("no-structure", n=n, seed=seed))


GENERATORS = {
    "hyperuniform-circle": hyperuniform_circle,
    "uniform-circle": uniform_circle,
    "hyperuniform-ellipse": hyperuniform_ellipse,
    "noisy-circles": noisy_circles,
    "noisy-moons": noisy_moons,
    "blobs": blobs,
    "no-structure": no_structure,
}


def generate(kind: str, **params) -> LabeledDataset:
    try:
        fn = GENERATORS[kind]
    except KeyError:
        raise ValueError(f"unknown dataset kind {kind!r}; choose from {sorted(GENERATORS)}") from None
    return fn(**params)


def regenerate(descriptor: dict) -> LabeledDataset:
    return generate(descriptor["generator"], **descriptor["params"])


def comparison_suite(n: int = 300, seed: int = 0) -> dict[str, LabeledDataset]:
    """The four datasets of the baseline comparison, at their default parameters."""
    return {
        "noisy-circles": noisy_circles(n, seed=seed),
        "noisy-moons": noisy_moons(n, seed=seed),
        "blobs": blobs(n, seed=seed),
        "no-structure": no_structure(n, seed=seed),
    }


def _parse_float(cell: str, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ValueError(f"non-numeric cell {cell!r} at row {row}, column {col}") from None


def load_csv(path, has_header: bool = False, label_column: int | str | None = None) -> LabeledDataset:
    """Read a rectangular numeric CSV; optionally split off an integer label column.

    ``label_column`` is a 0-based index, or a header name when ``has_header``.
    Row numbers in error messages are 1-based file lines.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = None
    start = 1
    if has_header:
        if not rows:
            raise ValueError(f"{path}: empty file")
        header, rows = rows[0], rows[1:]
        start = 2
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(f"{path}: ragged row {i + start}: expected {width} columns, got {len(r)}")
    values = np.array(
        [[_parse_float(c.strip(), i + start, j + 1) for j, c in enumerate(r)] for i, r in enumerate(rows)],
        dtype=np.float64,
    )
    labels = None
    if label_column is not None:
        if isinstance(label_column, str):
            if header is None or label_column not in header:
                raise ValueError(f"{path}: label column {label_column!r} not in header")
            label_column = header.index(label_column)
        if not -width <= label_column < width:
            raise ValueError(f"{path}: label column {label_column} out of range for {width} columns")
        col = values[:, label_column]
        if not np.all(col == np.round(col)):
            raise ValueError(f"{path}: label column {label_column} is not integer-valued")
        labels = col.astype(np.int64)
        values = np.delete(values, label_column, axis=1)
    if not np.isfinite(values).all():
        r, c = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(f"{path}: non-finite value at row {r + start}, column {c + 1}")
    return LabeledDataset(values, labels, {"generator": "csv", "params": {"path": str(path)}})


def format_float(x: float) -> str:
    """Shortest repr that round-trips exactly."""
    return repr(float(x))


def save_csv(path, data, labels=None, header: list[str] | None = None) -> None:
    """Write points (and an optional trailing label column) losslessly."""
    data = np.asarray(data, dtype=np.float64)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for i, row in enumerate(data):
            cells = [format_float(v) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            w.writerow(cells)
