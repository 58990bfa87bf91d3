"""Command line interface: ``localmap {embed,metrics,simulate,plot,gen-blobs}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .core import ConfigError, DataMatrix, LocalMapConfig, MetricsReport
from .data import BlobSpec, DataFormatError, generate_blobs, load_binary, load_csv, write_binary, write_csv
from .graph import cross_edge_ratio
from .metrics import edge_ratio_simulation, posthoc_knn_accuracy, silhouette
from .optim import OptimizationError, fit
from .svg import scatter_svg

BINARY_SUFFIXES = {".lmap", ".bin"}
_TYPES = {"int": int, "float": float, "str": str}


class CliError(Exception):
    pass


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (overrides --config)")
    g.add_argument("--config", type=Path, help="JSON file with LocalMapConfig fields")
    for f in dataclasses.fields(LocalMapConfig):
        if f.type == "bool":
            g.add_argument(_flag(f.name), dest=f.name, action=argparse.BooleanOptionalAction,
                           default=argparse.SUPPRESS)
            continue
        names = [_flag(f.name)]
        if _flag(f.name).lower() != names[0]:
            names.append(_flag(f.name).lower())
        g.add_argument(*names, dest=f.name, type=_TYPES[f.type], default=argparse.SUPPRESS,
                       metavar=f.type.upper())
    g.add_argument("--no-nn-weighting", dest="enable_nn_weighting", action="store_false",
                   default=argparse.SUPPRESS)
    g.add_argument("--no-local-fp", dest="enable_local_fp", action="store_false",
                   default=argparse.SUPPRESS)
    g.add_argument("--mode", choices=("localmap", "pacmap"), default="localmap",
                   help="pacmap disables both third-phase modifications")
    g.add_argument("--threads", type=int, default=1,
                   help="worker threads; 1 is the bitwise-deterministic mode")


def config_from_args(args) -> LocalMapConfig:
    cfg = LocalMapConfig.from_json(args.config.read_text()) if args.config else LocalMapConfig()
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(LocalMapConfig)
                 if hasattr(args, f.name)}
    cfg = cfg.replace(**overrides)
    if args.mode == "pacmap":
        cfg = cfg.replace(enable_nn_weighting=False, enable_local_fp=False)
    return cfg


def read_matrix(path: Path, labels: bool) -> DataMatrix:
    if path.suffix.lower() in BINARY_SUFFIXES:
        X = load_binary(path)
        if labels and X.labels is None:
            raise CliError(f"{path}: --labels given but the file has no label block")
        return X if labels else DataMatrix(X.values)
    return load_csv(path, has_labels=labels)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def _report_time(args, seconds: float) -> float:
    print(f"wall time {seconds:.3f} s", file=sys.stderr)
    # the deterministic mode keeps report bytes reproducible
    return 0.0 if args.threads == 1 else round(seconds, 6)


def cmd_embed(args) -> int:
    X = read_matrix(args.input, args.labels)
    cfg = config_from_args(args)
    t0 = time.perf_counter()
    state, runlog = fit(X, cfg, threads=args.threads)
    elapsed = time.perf_counter() - t0
    write_csv(args.out, state.coords, X.labels)
    log_path = args.log or _sibling(args.out, ".log.jsonl")
    log_path.write_text(runlog.to_jsonl())
    if X.labels is None:
        print("no labels: skipping the metrics report", file=sys.stderr)
        return 0
    report = MetricsReport(
        silhouette=silhouette(state.coords, X.labels),
        wall_time_seconds=_report_time(args, elapsed),
        config_echo=cfg.to_dict(),
        seed_echo=cfg.seed,
        posthoc_accuracy=posthoc_knn_accuracy(state.coords, X.labels, seed=cfg.seed)
        if args.posthoc else None,
        edge_ratio=cross_edge_ratio(runlog.pairs, X.labels),
    )
    (args.report or _sibling(args.out, ".report.json")).write_text(report.to_json())
    return 0


def cmd_metrics(args) -> int:
    X = load_csv(args.input, has_labels=True)
    cfg = config_from_args(args)
    t0 = time.perf_counter()
    s = silhouette(X.values, X.labels)
    acc = posthoc_knn_accuracy(X.values, X.labels, k=args.k, seed=cfg.seed) if args.posthoc else None
    report = MetricsReport(silhouette=s, wall_time_seconds=_report_time(args, time.perf_counter() - t0),
                           config_echo=cfg.to_dict(), seed_echo=cfg.seed, posthoc_accuracy=acc)
    text = report.to_json()
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    print("n\tempirical\tstd\tpredicted")
    for n in args.n:
        r = edge_ratio_simulation(n, args.clusters, args.p_nn, args.n_fp, args.seeds, seed=args.seed)
        print(f"{n}\t{r.mean:.6g}\t{r.std:.6g}\t{r.predicted:.6g}")
    return 0


def cmd_plot(args) -> int:
    arr = load_csv(args.input, has_labels=False).values
    labels = None
    if arr.shape[1] >= 3:
        raw = arr[:, 2]
        if not np.all(raw == np.round(raw)):
            raise CliError(f"{args.input}: third column is not an integer label")
        labels = raw.astype(np.int64)
    elif arr.shape[1] < 2:
        raise CliError(f"{args.input}: need at least two columns")
    args.out.write_text(scatter_svg(arr[:, :2], labels))
    return 0


def cmd_gen_blobs(args) -> int:
    spec = BlobSpec(**{f.name: getattr(args, f.name) for f in dataclasses.fields(BlobSpec)})
    X = generate_blobs(spec)
    if args.out.suffix.lower() in BINARY_SUFFIXES:
        write_binary(args.out, X)
    else:
        write_csv(args.out, X.values, X.labels)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localmap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="fit an embedding")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--labels", action="store_true", help="last input column holds class labels")
    p.add_argument("--out", type=Path, required=True, help="embedding CSV")
    p.add_argument("--log", type=Path, help="run log (default: <out>.log.jsonl)")
    p.add_argument("--report", type=Path, help="metrics report (default: <out>.report.json)")
    p.add_argument("--posthoc", action="store_true", help="add kNN posthoc accuracy to the report")
    _add_config_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("metrics", help="score a labeled embedding CSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.add_argument("--posthoc", action="store_true")
    p.add_argument("--k", type=int, default=5)
    _add_config_flags(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("simulate", help="cross-cluster NN/FP edge ratio versus n")
    p.add_argument("--n", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--p-nn", type=float, default=0.001)
    p.add_argument("--n-fp", type=int, default=20)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="SVG scatter of an embedding CSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("gen-blobs", help="write synthetic Gaussian blobs")
    p.add_argument("--out", type=Path, required=True, help=".csv, or .lmap for the binary format")
    for f in dataclasses.fields(BlobSpec):
        p.add_argument(_flag(f.name), dest=f.name, type=_TYPES[f.type], default=f.default)
    p.set_defaults(func=cmd_gen_blobs)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, DataFormatError, OptimizationError, ValueError, OSError) as exc:
        print(f"localmap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
