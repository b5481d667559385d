"""Singular-value traces of the condensation operators.

Three families are tracked, indexed by operator number ``t = 0..T`` for a
run of ``T`` iterations.  Operator ``t`` is built from snapshot ``X(t)``
with the bandwidth of iteration ``t + 1``; the last one, from the final
snapshot, reuses the bandwidth of iteration ``T``.

* ``step``        -- ``P_t`` on its own,
* ``cumulative``  -- the running product ``P_t ... P_1 P_0``,
* ``power``       -- ``P_0^(t+1)``, the time-homogeneous diffusion-maps
  baseline, evaluated on the symmetric conjugate of ``P_0`` so that its
  singular values are exactly ``|lambda_i|^(t+1)``.

At ``t = 0`` every family describes the single operator ``P_0``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import CondensationTrace
from .operators import OperatorKind, diffusion_operator

FAMILIES = ("step", "cumulative", "power")


@dataclass
class SpectralTrace:
    family: str
    k: int
    values: np.ndarray  # (T, k), nontrivial singular values sigma_2..sigma_{k+1}
    leading: np.ndarray  # (T,), the dropped sigma_1 (operator 2-norm)
    eigenvalues: np.ndarray | None = field(default=None)  # power family: eigenvalues of P_0

    @property
    def n_operators(self) -> int:
        return self.values.shape[0]


def singular_values(M) -> np.ndarray:
    return np.linalg.svd(np.asarray(M, dtype=np.float64), compute_uv=False)


def top_singular_values(M, k: int) -> np.ndarray:
    """The ``k`` largest singular values after dropping the leading one."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not 1 <= k < M.shape[0]:
        raise ValueError(f"k must satisfy 1 <= k < N = {M.shape[0]}, got {k}")
    return singular_values(M)[1 : k + 1]


def _operators(trace: CondensationTrace, kind: OperatorKind = "anisotropic"):
    stored = [t for t, _ in trace.snapshots]
    if stored != list(range(trace.n_iterations + 1)):
        raise ValueError("spectra require full snapshots (run with snapshot_stride=1)")
    T = trace.n_iterations
    for t in range(T + 1):
        yield diffusion_operator(trace.snapshot(t), trace.epsilon_at(min(t + 1, T)), kind)


def spectral_traces(
    trace: CondensationTrace,
    k: int = 14,
    families=FAMILIES,
    power_kind: OperatorKind = "anisotropic",
) -> dict[str, SpectralTrace]:
    """Rebuild every operator of a run and record its top-``k`` nontrivial spectrum.

    ``power_kind="homogeneous"`` uses the plain ``D^-1 K`` diffusion-maps
    operator for the power family instead of the engine's anisotropic one.
    """
    unknown = set(families) - set(FAMILIES)
    if unknown:
        raise ValueError(f"unknown families {sorted(unknown)}; choose from {FAMILIES}")
    n = trace.n_points
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N = {n}, got {k}")
    rows = {f: [] for f in families}
    lead = {f: [] for f in families}
    eig = None
    cumulative = None
    power = None
    S0 = None
    for t, op in enumerate(_operators(trace)):
        P = op.values
        if "step" in rows:
            s = singular_values(P)
            rows["step"].append(s[1 : k + 1])
            lead["step"].append(s[0])
        if "cumulative" in rows:
            cumulative = P.copy() if cumulative is None else P @ cumulative
            s = singular_values(cumulative)
            rows["cumulative"].append(s[1 : k + 1])
            lead["cumulative"].append(s[0])
        if "power" in rows:
            if S0 is None:
                base = op if power_kind == "anisotropic" else diffusion_operator(
                    trace.snapshot(0), trace.epsilon_at(1), power_kind
                )
                S0 = base.symmetric_conjugate()
                eig = base.eigenvalues()
            power = S0.copy() if power is None else S0 @ power
            s = singular_values(power)
            rows["power"].append(s[1 : k + 1])
            lead["power"].append(s[0])
    out = {}
    for f in families:
        vals = np.array(rows[f]).reshape(-1, k)
        out[f] = SpectralTrace(f, k, vals, np.array(lead[f]), eig if f == "power" else None)
    return out


def power_family_from_eigenvalues(eigenvalues, k: int, n_operators: int) -> np.ndarray:
    """``|lambda_i|^(t+1)`` for the top-``k`` nontrivial eigenvalue magnitudes."""
    mags = np.sort(np.abs(np.asarray(eigenvalues)))[::-1][1 : k + 1]
    t = np.arange(1, n_operators + 1)[:, None]
    return mags[None, :] ** t


def spectral_drop_iterations(step: SpectralTrace, count: int) -> list[int]:
    """Iterations (1-based) of the ``count`` largest one-step drops of the summed step spectrum.

    The drop attributed to iteration ``t`` is ``sum(sigma(P_{t-2})) - sum(sigma(P_{t-1}))``,
    i.e. between the operators used by iterations ``t - 1`` and ``t``.
    """
    total = step.values.sum(axis=1)
    drops = total[:-1] - total[1:]
    order = np.argsort(-drops, kind="stable")[:count]
    return sorted(int(i) + 2 for i in order)


HEADER = ["family", "iteration", "index", "value"]


def export_spectra(traces: dict[str, SpectralTrace] | list[SpectralTrace], path=None) -> str:
    """CSV with one row per (family, operator index, singular-value index, value).

    ``index`` is the singular-value rank, starting at 2 for the first
    nontrivial value.  Values are written with ``repr`` so they round-trip.
    """
    if isinstance(traces, dict):
        traces = list(traces.values())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for tr in traces:
        for t, row in enumerate(tr.values):
            for i, v in enumerate(row):
                w.writerow([tr.family, t, i + 2, repr(float(v))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def import_spectra(source) -> dict[str, np.ndarray]:
    """Parse :func:`export_spectra` output back into ``{family: (T, k) array}``."""
    text = Path(source).read_text() if isinstance(source, Path) else source
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != HEADER:
        raise ValueError(f"unexpected header {header}")
    cells: dict[str, dict[tuple[int, int], float]] = {}
    for fam, t, i, v in reader:
        cells.setdefault(fam, {})[(int(t), int(i))] = float(v)
    out = {}
    for fam, d in cells.items():
        T = max(t for t, _ in d) + 1
        k = max(i for _, i in d) - 1
        arr = np.full((T, k), np.nan)
        for (t, i), v in d.items():
            arr[t, i - 2] = v
        out[fam] = arr
    return out
