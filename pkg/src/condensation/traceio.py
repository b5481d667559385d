"""JSON/CSV persistence of condensation traces."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .datasets import load_csv, save_csv
from .engine import CondensationConfig, CondensationTrace, MergeEvent

FORMAT_VERSION = 1


def trace_to_dict(trace: CondensationTrace, snapshot_files: list[str] | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "config": trace.config.to_dict(),
        "epsilon0": trace.epsilon0,
        "merge_threshold": trace.merge_threshold,
        "n_points": trace.n_points,
        "n_iterations": trace.n_iterations,
        "epsilon_schedule": [[t, e] for t, e in trace.epsilon_schedule],
        "qdiff": [[t, q] for t, q in trace.qdiff_log],
        "degrees": [[t, q.tolist()] for t, q in trace.degree_log],
        "merges": [
            {
                "iteration": m.iteration,
                "absorbed": m.absorbed_label,
                "surviving": m.surviving_label,
                "size": m.member_count_after,
            }
            for m in trace.merge_log
        ],
        "labels_per_iteration": [lab.tolist() for lab in trace.labels_per_iteration],
        "halt_reason": trace.halt_reason,
        "snapshot_files": snapshot_files or [],
    }


def write_snapshots(trace: CondensationTrace, directory: Path, relative_to: Path) -> list[str]:
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for t, X in trace.snapshots:
        p = directory / f"iter_{t:05d}.csv"
        save_csv(p, X)
        files.append(str(p.relative_to(relative_to)) if p.is_relative_to(relative_to) else str(p))
    return files


def save_trace(trace: CondensationTrace, path, snapshots: bool = True) -> dict:
    """Write the trace JSON and, optionally, one CSV per stored snapshot.

    Snapshots go to ``<stem>_snapshots/`` next to the JSON file and are
    referenced by relative path.
    """
    path = Path(path)
    files = []
    if snapshots:
        files = write_snapshots(trace, path.parent / f"{path.stem}_snapshots", path.parent)
    doc = trace_to_dict(trace, files)
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return doc


def load_trace(path) -> CondensationTrace:
    path = Path(path)
    doc = json.loads(path.read_text())
    cfg = CondensationConfig(**doc["config"])
    trace = CondensationTrace(config=cfg, epsilon0=doc["epsilon0"], merge_threshold=doc["merge_threshold"])
    trace.epsilon_schedule = [(int(t), float(e)) for t, e in doc["epsilon_schedule"]]
    trace.qdiff_log = [(int(t), float(q)) for t, q in doc.get("qdiff", [])]
    trace.degree_log = [(int(t), np.array(q, dtype=np.float64)) for t, q in doc.get("degrees", [])]
    trace.merge_log = [
        MergeEvent(m["iteration"], m["absorbed"], m["surviving"], m["size"]) for m in doc["merges"]
    ]
    trace.labels_per_iteration = [np.array(lab, dtype=np.int64) for lab in doc["labels_per_iteration"]]
    trace.halt_reason = doc["halt_reason"]
    for f in doc.get("snapshot_files", []):
        p = Path(f)
        if not p.is_absolute():
            p = path.parent / p
        t = int(p.stem.split("_")[-1])
        trace.snapshots.append((t, load_csv(p).data))
    return trace
