"""Command-line entry point.

Exit status: 0 on success, 1 on a usage error, 2 when the command fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .config import load_config, write_manifest
from .datagen import (
    FAMILIES,
    GeneratorSpec,
    cycle_path_dataset,
    dual_to_dict,
    generate,
    read_json_any,
    write_dual_json,
    write_graph_json,
)
from .dht import dht, dht_inverse
from .errors import EhgnnError
from .graph import Graph
from .models import build_reconstruction_model
from .tasks import (
    build_classification_model,
    compression_report,
    evaluate,
    train_classification,
    train_reconstruction,
    tune_compression,
    write_history_csv,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------- dht


def cmd_dht(args):
    obj = read_json_any(args.input)
    if isinstance(obj, Graph):
        h = dht(obj)
        if dht_inverse(h) != obj:
            raise EhgnnError("round trip through the dual hypergraph changed the graph")
        write_dual_json(h, args.output)
        print(f"graph ({obj.num_nodes} nodes, {obj.num_edges} edges) -> dual hypergraph {args.output}")
    else:
        g = dht_inverse(obj, validate=True)
        if dual_to_dict(dht(g)) != dual_to_dict(obj):
            raise EhgnnError("round trip through the graph changed the dual hypergraph")
        write_graph_json(g, args.output)
        print(f"dual hypergraph ({obj.num_dual_nodes} dual nodes) -> graph {args.output}")
    return 0


# ---------------------------------------------------------------- gen

GEN_PARAMS = {
    "leaves": "leaves",
    "n": "n",
    "m": "m",
    "n_points": "n_points",
    "k_neighbors": "k_neighbors",
    "colors": "n_color_clusters",
    "attach": "attach",
}


def cmd_gen(args):
    params = {key: getattr(args, attr) for attr, key in GEN_PARAMS.items() if getattr(args, attr) is not None}
    if args.family == "cycle_or_path":
        params["cycle"] = not args.path
    g = generate(GeneratorSpec(args.family, params, args.seed or 0))
    write_graph_json(g, args.output)
    print(f"{args.family}: {g.num_nodes} nodes, {g.num_edges} edges -> {args.output}")
    return 0


# ---------------------------------------------------------------- training runs


def _dataset(config):
    family = config["dataset"]
    if family is None:
        raise EhgnnError("config needs a 'dataset' key")
    if family == "cycle_or_path":
        return cycle_path_dataset(config["num_graphs"], config["n_min"], config["n_max"], config["data_seed"])
    if family not in FAMILIES:
        raise EhgnnError(f"unknown dataset {family!r}; choose from {', '.join(FAMILIES)}")
    params = {k: config[k] for k in ("n", "m", "n_points", "k_neighbors", "n_color_clusters")}
    return [generate(GeneratorSpec(family, params, config["data_seed"] + i)) for i in range(config["num_graphs"])]


def run_reconstruct(config):
    dataset = _dataset(config)
    model = build_reconstruction_model(
        dataset[0],
        hidden=config["hidden"],
        node_ratio=config["node_ratio"],
        edge_ratio=config["edge_ratio"],
        edge_model=config["edge_model"],
        categorical=config["categorical"],
        seed=config["seed"],
    )
    model, result = train_reconstruction(
        model,
        dataset,
        config["epochs"],
        lr_node=config["lr_node"],
        lr_edge=config["lr_edge"],
        seed=config["seed"],
        batch_size=config["batch_size"],
        patience=config["patience"],
    )
    m = evaluate(model, dataset)
    metrics = {k: v for k, v in vars(m).items() if v is not None}
    metrics["best_epoch"] = result.best_epoch
    return metrics, result.history


def run_classify(config):
    dataset = _dataset(config)
    num_classes = len({g.label for g in dataset})
    model = build_classification_model(
        dataset[0], max(num_classes, 2), hidden=config["hidden"], keep_ratio=config["keep_ratio"], seed=config["seed"]
    )
    _, result = train_classification(
        model,
        dataset,
        config["epochs"],
        seed=config["seed"],
        lr=config["lr"],
        batch_size=config["batch_size"],
        patience=config["patience"],
    )
    return {"test_accuracy": result.test_accuracy, "best_epoch": result.best_epoch}, result.history


def run_compress(config):
    g = _dataset({**config, "num_graphs": 1})[0]
    node_ratio = 0.15 if config["node_ratio"] is None else config["node_ratio"]
    report, model = tune_compression(
        g,
        config["edge_ratios"],
        node_ratio=node_ratio,
        accuracy=config["accuracy"],
        hidden=config["hidden"],
        epochs=config["epochs"],
        lr_edge=config["lr_edge"],
        seed=config["seed"],
    )
    return {k: v for k, v in report.items() if v is not None}, []


RUNNERS = {"reconstruct": run_reconstruct, "classify": run_classify, "compress": run_compress}


def cmd_run(args):
    config = load_config(args.config)
    if config["task"] not in (None, args.command):
        raise EhgnnError(f"config is for task {config['task']!r}, not {args.command!r}")
    config["task"] = args.command
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["out"] = args.out
    metrics, history = RUNNERS[args.command](config)
    out = Path(config["out"])
    write_manifest(config, out)
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.csv and history:
        write_history_csv(history, out / "history.csv")
    for key, value in sorted(metrics.items()):
        if not isinstance(value, (list, dict)):
            print(f"{key}: {value}")
    print(f"outputs in {out}")
    return 0


# ---------------------------------------------------------------- bench


def _sizes(text):
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_bench(args):
    if args.kind == "transform":
        rows = bench.bench_transform(_sizes(args.sizes), args.repeats or 5, n=args.n or 1000, seed=args.seed or 0)
        summary = bench.transform_slopes(rows)
    elif args.kind == "mp":
        graphs = bench.default_mp_graphs(args.n or 3000, args.m or 12000, seed=args.seed or 0)
        rows = bench.bench_message_passing(graphs, args.repeats or 20, seed=args.seed or 0, workers=args.workers)
        summary = {}
    else:
        rows = bench.bench_kernels(_sizes(args.sizes), args.repeats or 5, n=args.n or 1000, seed=args.seed or 0)
        summary = {}
        speedups = bench.kernel_speedups(rows)
        if speedups:
            print(bench.format_table(speedups))
    print(bench.format_table(rows))
    for key, value in summary.items():
        print(f"slope {key}: {value:.3f}")
    if args.csv:
        out = Path(args.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"bench_{args.kind}.csv"
        bench.write_csv(rows, path)
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--csv", action="store_true", help="also write CSV output")

    parser = _Parser(prog="ehgnn", description="Dual hypergraph edge learning toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("dht", parents=[common], help="graph <-> dual hypergraph with round-trip check")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_dht)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic graph")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--leaves", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--n-points", type=int)
    p.add_argument("--k-neighbors", type=int)
    p.add_argument("--colors", type=int)
    p.add_argument("--attach", type=int)
    p.add_argument("--path", action="store_true", help="cycle_or_path: build a path instead of a cycle")
    p.set_defaults(func=cmd_gen)

    for name in RUNNERS:
        p = sub.add_parser(name, parents=[common], help=f"run the {name} pipeline from a config file")
        p.add_argument("config")
        p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", parents=[common], help="timing benchmarks")
    p.add_argument("kind", choices=("transform", "mp", "kernels"))
    p.add_argument("--sizes", default="2000,4000,8000,16000", help="comma-separated edge counts")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    if args.command is None:
        print(parser.format_help(), file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (EhgnnError, OSError, ValueError) as exc:
        print(f"ehgnn: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
