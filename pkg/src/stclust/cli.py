"""Command-line entry point.

Subcommands: run, sweep, export-graph, inspect-embeddings.
Exit codes: 0 success, 2 config validation, 3 training divergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as stio
from .graph import knn_graph_from_embeddings
from .neural import DivergenceError
from .pipeline import ConfigError, load_config, run_pipeline, run_sweep


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stclust",
                                     description="Short-text embedding clustering pipelines")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one pipeline end to end")
    sweep_p = sub.add_parser("sweep", help="run a pipeline across a hyperparameter axis")
    for p in (run_p, sweep_p):
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
    sweep_p.add_argument("--axis", required=True, choices=["epochs", "layer_spec"])
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated sweep values")

    graph_p = sub.add_parser("export-graph", help="build the KNN text graph and export its edge list")
    graph_p.add_argument("--embeddings", required=True)
    graph_p.add_argument("--k", type=int, default=10, help="neighbors per node")
    graph_p.add_argument("--out", required=True, help="edge list output file")

    inspect_p = sub.add_parser("inspect-embeddings", help="print STCE header and payload statistics")
    inspect_p.add_argument("--in", dest="path", required=True)
    return parser


def _cmd_run(args) -> int:
    overrides = _parse_overrides(args.overrides)
    if args.seed is not None:
        overrides["base_seed"] = str(args.seed)
    config = load_config(args.config, overrides)
    run_pipeline(config, args.out)
    print(f"report written to {args.out}/report.json")
    return 0


def _cmd_sweep(args) -> int:
    overrides = _parse_overrides(args.overrides)
    if args.seed is not None:
        overrides["base_seed"] = str(args.seed)
    config = load_config(args.config, overrides)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    run_sweep(config, args.axis, values, args.out)
    print(f"sweep table written to {args.out}/sweep.csv")
    return 0


def _cmd_export_graph(args) -> int:
    emb = stio.read_embeddings(args.embeddings)
    graph = knn_graph_from_embeddings(emb, args.k)
    graph.save_edge_list(args.out)
    print(f"{graph.num_edges} edges written to {args.out}")
    return 0


def _cmd_inspect(args) -> int:
    emb = stio.read_embeddings(args.path)
    info = {
        "n": emb.n,
        "d": emb.d,
        "has_ids": emb.ids is not None,
        "min": float(emb.data.min()),
        "max": float(emb.data.max()),
        "mean": float(emb.data.mean()),
        "row_norm_mean": float(np.linalg.norm(emb.data, axis=1).mean()),
    }
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "export-graph": _cmd_export_graph,
        "inspect-embeddings": _cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, stio.StceFormatError, stio.NonFiniteValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
