"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 iteration budget exhausted (the
trace is still written).  Outputs are deterministic; timestamps live only in
the ``*.manifest.json`` files.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import datasets as ds
from .baselines import CompareConfig, compare
from .engine import CondensationConfig, run
from .graph import load_adjacency, spectral_coordinates
from .hierarchy import build_tree, persistence_csv, sankey_export
from .operators import diffusion_operator, velocity_field
from .spectra import FAMILIES, export_spectra, spectral_traces
from .traceio import load_trace, save_trace

OUT_DIR_ENV = "CONDENSATION_OUT_DIR"

log = logging.getLogger("condensation")


class InputError(Exception):
    pass


def _out_path(p: str) -> Path:
    path = Path(p)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n")


def _write_manifest(out: Path, command: str, config: dict, inputs: dict, outputs: list, started: float,
                    halt_reason=None) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": [str(o) for o in outputs],
        "wall_time_seconds": time.perf_counter() - started,
        "halt_reason": halt_reason,
        "version": __version__,
    }
    mpath = out.with_name(out.name + ".manifest.json")
    _dump_json(mpath, manifest)
    return mpath


def _load_points(path: str, header: bool, label_column) -> ds.LabeledDataset:
    if not Path(path).exists():
        raise InputError(f"input file not found: {path}")
    try:
        return ds.load_csv(path, has_header=header, label_column=label_column)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _load_trace(path: str):
    if not Path(path).exists():
        raise InputError(f"trace file not found: {path}")
    try:
        return load_trace(path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: invalid trace ({exc})") from None


def _label_column(value):
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        return value


# gen-data ------------------------------------------------------------------

GEN_PARAMS = {
    "hyperuniform-circle": ("n", "radius"),
    "uniform-circle": ("n", "radius", "seed"),
    "hyperuniform-ellipse": ("n", "a", "b"),
    "noisy-circles": ("n", "factor", "noise", "seed"),
    "noisy-moons": ("n", "noise", "seed"),
    "blobs": ("n", "stds", "seed"),
    "no-structure": ("n", "seed"),
}


def cmd_gen_data(args) -> int:
    started = time.perf_counter()
    if args.from_descriptor:
        descriptor = json.loads(Path(args.from_descriptor).read_text())
        data = ds.regenerate(descriptor)
    else:
        if args.kind is None:
            raise InputError("--kind is required (or --from-descriptor)")
        params = {}
        for name in GEN_PARAMS[args.kind]:
            v = getattr(args, name)
            if v is not None:
                params[name] = v
        try:
            data = ds.generate(args.kind, **params)
        except (TypeError, ValueError) as exc:
            raise InputError(str(exc)) from None
    out = _out_path(args.out)
    ds.save_csv(out, data.data)
    outputs = [out]
    if data.labels is not None:
        lpath = out.with_name(out.stem + ".labels.csv")
        lpath.write_text("".join(f"{int(v)}\n" for v in data.labels))
        outputs.append(lpath)
    dpath = out.with_name(out.stem + ".descriptor.json")
    _dump_json(dpath, data.descriptor)
    outputs.append(dpath)
    _write_manifest(out, "gen-data", data.descriptor, {}, outputs, started)
    return 0


# condense ------------------------------------------------------------------

def _parse_epsilon(value: str):
    if value in ("auto", "nn"):
        return value
    try:
        return float(value)
    except ValueError:
        raise InputError(f"--epsilon must be 'auto', 'nn' or a number, got {value!r}") from None


def cmd_condense(args) -> int:
    started = time.perf_counter()
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
        cfg_dict = dict(manifest["config"])
        input_path = args.input or manifest["inputs"]["input"]
        header = manifest["inputs"].get("header", False)
        label_column = manifest["inputs"].get("label_column")
    else:
        if not args.input:
            raise InputError("an input CSV is required (or --manifest)")
        cfg_dict = {
            "epsilon0": _parse_epsilon(args.epsilon),
            "nn_scale": args.nn_scale,
            "merge_threshold": args.merge_threshold,
            "merge_mode": args.merge_mode,
            "qdiff_threshold": args.qdiff_threshold,
            "epsilon_growth": args.epsilon_growth,
            "max_iterations": args.max_iterations,
            "snapshot_stride": args.stride,
        }
        input_path, header, label_column = args.input, args.header, _label_column(args.label_column)
    data = _load_points(input_path, header, label_column)
    try:
        cfg = CondensationConfig(**cfg_dict)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    try:
        trace = run(data.data, cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _out_path(args.out)
    doc = save_trace(trace, out, snapshots=not args.no_snapshots)
    outputs = [out] + [out.parent / f for f in doc["snapshot_files"]]
    resolved = cfg.to_dict()
    resolved["epsilon0"] = trace.epsilon0
    inputs = {"input": str(input_path), "header": header, "label_column": label_column}
    _write_manifest(out, "condense", resolved, inputs, outputs, started, trace.halt_reason)
    log.info("%s after %d iterations, %d clusters", trace.halt_reason, trace.n_iterations,
             len(np.unique(trace.final_labels)))
    return 2 if trace.halt_reason == "max-iterations" else 0


# trace consumers -------------------------------------------------------------

def cmd_spectra(args) -> int:
    started = time.perf_counter()
    trace = _load_trace(args.trace)
    families = tuple(f.strip() for f in args.families.split(",") if f.strip())
    try:
        traces = spectral_traces(trace, args.top, families, power_kind=args.power_kind)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _out_path(args.out)
    export_spectra(traces, out)
    _write_manifest(out, "spectra", {"top": args.top, "families": list(families), "power_kind": args.power_kind},
                    {"trace": args.trace}, [out], started)
    return 0


def cmd_sankey(args) -> int:
    started = time.perf_counter()
    trace = _load_trace(args.trace)
    tree = build_tree(trace)
    to_t = trace.n_iterations if args.to is None else args.to
    try:
        doc = sankey_export(tree, args.from_, to_t)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _out_path(args.out)
    _dump_json(out, doc)
    _write_manifest(out, "sankey", {"from": args.from_, "to": to_t}, {"trace": args.trace}, [out], started)
    return 0


def cmd_persistence(args) -> int:
    started = time.perf_counter()
    trace = _load_trace(args.trace)
    out = _out_path(args.out)
    out.write_text(persistence_csv(build_tree(trace), args.weight))
    _write_manifest(out, "persistence", {"weight": args.weight}, {"trace": args.trace}, [out], started)
    return 0


def cmd_velocity(args) -> int:
    started = time.perf_counter()
    trace = _load_trace(args.trace)
    t = args.iteration
    last = trace.n_iterations
    if not 0 <= t <= last:
        raise InputError(f"iteration {t} out of range; valid range is [0, {last}]")
    try:
        X = trace.snapshot(t)
    except KeyError:
        stored = [s for s, _ in trace.snapshots]
        raise InputError(f"no snapshot for iteration {t}; stored iterations: {stored}") from None
    # the final snapshot reuses the last bandwidth, as in the spectra
    eps = trace.epsilon_at(min(t + 1, last))
    P = diffusion_operator(X, eps)
    V = velocity_field(P, X)
    m = X.shape[1]
    out = _out_path(args.out)
    header = [f"x{j}" for j in range(m)] + [f"v{j}" for j in range(m)]
    ds.save_csv(out, np.hstack([X, V]), header=header)
    _write_manifest(out, "velocity", {"iteration": t, "epsilon": eps}, {"trace": args.trace}, [out], started)
    return 0


def cmd_embed_graph(args) -> int:
    started = time.perf_counter()
    if not Path(args.adjacency).exists():
        raise InputError(f"adjacency file not found: {args.adjacency}")
    try:
        adj = load_adjacency(args.adjacency)
        coords = spectral_coordinates(adj, args.dims, scale=not args.no_scale, laplacian=args.laplacian)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _out_path(args.out)
    ds.save_csv(out, coords)
    outputs = [out]
    if adj.node_names is not None:
        npath = out.with_name(out.stem + ".names.txt")
        npath.write_text("".join(f"{n}\n" for n in adj.node_names))
        outputs.append(npath)
    _write_manifest(out, "embed-graph", {"dims": args.dims, "scale": not args.no_scale, "laplacian": args.laplacian},
                    {"adjacency": args.adjacency}, outputs, started)
    return 0


def cmd_compare(args) -> int:
    started = time.perf_counter()
    if args.kind:
        data = ds.generate(args.kind, **({"n": args.n} if args.n else {}))
    elif args.input:
        data = _load_points(args.input, args.header, _label_column(args.label_column))
        if args.labels:
            lab = np.loadtxt(args.labels, dtype=np.int64, ndmin=1)
            if len(lab) != data.n_points:
                raise InputError(f"{args.labels}: {len(lab)} labels for {data.n_points} points")
            data.labels = lab
    else:
        raise InputError("compare needs an input CSV or --kind")
    cond = CondensationConfig(epsilon0=_parse_epsilon(args.epsilon), nn_scale=args.nn_scale,
                              max_iterations=args.max_iterations)
    cfg = CompareConfig(condensation=cond, seed=args.seed, batch_size=args.batch_size)
    report = compare(data, cfg)
    out = _out_path(args.out)
    _dump_json(out, report)
    _write_manifest(out, "compare", {"condensation": cond.to_dict(), "seed": args.seed, "batch_size": args.batch_size},
                    {"input": args.input, "kind": args.kind}, [out], started,
                    report["condensation"]["halt_reason"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="condensation", description="Diffusion condensation toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset")
    g.add_argument("--kind", choices=sorted(ds.GENERATORS))
    g.add_argument("--from-descriptor")
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--radius", type=float)
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--factor", type=float)
    g.add_argument("--noise", type=float)
    g.add_argument("--stds", type=lambda s: [float(v) for v in s.split(",")])
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    c = sub.add_parser("condense", help="run condensation on a CSV of points")
    c.add_argument("input", nargs="?")
    c.add_argument("--manifest", help="rerun with the config and input recorded in a manifest")
    c.add_argument("--header", action="store_true")
    c.add_argument("--label-column")
    c.add_argument("--epsilon", default="auto")
    c.add_argument("--nn-scale", type=float, default=4.0)
    c.add_argument("--merge-threshold", type=float, default=1e-3)
    c.add_argument("--merge-mode", choices=["absolute", "relative"], default="absolute")
    c.add_argument("--qdiff-threshold", type=float, default=1e-4)
    c.add_argument("--epsilon-growth", type=float, default=2.0)
    c.add_argument("--max-iterations", type=int, default=1000)
    c.add_argument("--stride", type=int, default=1)
    c.add_argument("--no-snapshots", action="store_true")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_condense)

    s = sub.add_parser("spectra", help="singular-value traces of a run")
    s.add_argument("trace")
    s.add_argument("--top", type=int, default=14)
    s.add_argument("--families", default=",".join(FAMILIES))
    s.add_argument("--power-kind", choices=["anisotropic", "homogeneous"], default="anisotropic")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_spectra)

    k = sub.add_parser("sankey", help="Sankey JSON for an iteration window")
    k.add_argument("trace")
    k.add_argument("--from", dest="from_", type=int, default=0)
    k.add_argument("--to", type=int)
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_sankey)

    e = sub.add_parser("persistence", help="cluster persistence table")
    e.add_argument("trace")
    e.add_argument("--weight", choices=["iterations", "epsilon"], default="iterations")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_persistence)

    v = sub.add_parser("velocity", help="generator velocity field at an iteration")
    v.add_argument("trace")
    v.add_argument("--iteration", type=int, required=True)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_velocity)

    gr = sub.add_parser("embed-graph", help="spectral coordinates of an adjacency matrix")
    gr.add_argument("adjacency")
    gr.add_argument("--dims", type=int, default=10)
    gr.add_argument("--no-scale", action="store_true")
    gr.add_argument("--laplacian", action="store_true")
    gr.add_argument("--out", required=True)
    gr.set_defaults(func=cmd_embed_graph)

    m = sub.add_parser("compare", help="early/late condensation vs. baseline clusterers")
    m.add_argument("input", nargs="?")
    m.add_argument("--kind", choices=sorted(ds.GENERATORS))
    m.add_argument("--n", type=int)
    m.add_argument("--header", action="store_true")
    m.add_argument("--label-column")
    m.add_argument("--labels", help="file with one integer label per line")
    m.add_argument("--epsilon", default="nn")
    m.add_argument("--nn-scale", type=float, default=4.0)
    m.add_argument("--max-iterations", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--batch-size", type=int, default=100)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
