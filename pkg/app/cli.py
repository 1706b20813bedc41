"""Command-line entry point: run, aggregate, plot, graph and bound."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from app.analysis.bounds import EVALUATORS, BoundCurve, evaluate_bound
from app.core.config import settings
from app.core.exceptions import ConfigError, GraphConstructionError, MaclabError, NumericError
from app.core.logging import setup_logging
from app.net.graph import TOPOLOGY_KINDS, build_topology, max_degree_gossip, spectral_summary, write_edge_list
from app.services.aggregate_service import aggregate_directory
from app.services.config_loader import load_config, load_plot_spec
from app.services.experiment_service import run_experiment, to_builtin
from app.services.plot_service import plot_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _parse_param(item: str):
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"expected key=value, got '{item}'", field="param")
    try:
        return key, float(value) if any(c in value for c in ".eE") else int(value)
    except ValueError:
        return key, value


def cmd_run(args: argparse.Namespace) -> str:
    config = load_config(args.config)
    summary = run_experiment(config, Path(args.output) if args.output else None)
    return f"wrote {len(summary.trace_files)} traces, {summary.summary_file} and {summary.finals_file}"


def cmd_aggregate(args: argparse.Namespace) -> str:
    return f"wrote {aggregate_directory(args.directory)}"


def cmd_plot(args: argparse.Namespace) -> str:
    spec = load_plot_spec(args.spec)
    return f"wrote {plot_csv(args.csv, spec, args.output)}"


def cmd_graph(args: argparse.Namespace) -> str:
    try:
        graph = build_topology(
            args.kind,
            n_agents=args.n_agents,
            degree=args.degree,
            rows=args.rows,
            cols=args.cols,
            radius=args.radius,
            edge_probability=args.edge_probability,
            delay=args.delay,
            seed=args.seed,
        )
    except GraphConstructionError as e:
        raise ConfigError(str(e), field="topology") from e
    summary = spectral_summary(graph, max_degree_gossip(graph))
    if args.edges:
        write_edge_list(graph, args.edges)
    record = {"n_agents": graph.n_agents, "n_edges": len(graph.edges), **summary.as_dict()}
    return json.dumps(to_builtin(record), sort_keys=True)


def cmd_bound(args: argparse.Namespace) -> str:
    params = dict(_parse_param(p) for p in args.param)
    if args.x is None:
        try:
            value = evaluate_bound(args.name, **params)
        except TypeError as e:
            raise ConfigError(str(e), field="param") from e
        return f"{args.name} = {value:.12g}"
    start, stop, count = args.grid
    xs = np.linspace(start, stop, int(count))
    if args.x in ("n", "n_arms", "n_agents", "neighborhood", "degree", "max_degree", "delay"):
        xs = np.unique(np.round(xs).astype(int))
    curve = BoundCurve(args.name, args.x, params)
    path = curve.write_csv(args.output, xs)
    return f"wrote {len(xs)} points of {args.name} to {path}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maclab", description=f"{settings.APP_NAME} experiment toolkit")
    parser.add_argument("--log-level", default=None, help="override LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--output", help="output directory (defaults to the config's output_dir)")
    run.set_defaults(handler=cmd_run)

    aggregate = commands.add_parser("aggregate", help="reduce trace_seed*.csv files under a directory")
    aggregate.add_argument("directory")
    aggregate.set_defaults(handler=cmd_aggregate)

    plot = commands.add_parser("plot", help="draw an SVG line plot from a CSV and a [plot] spec")
    plot.add_argument("csv")
    plot.add_argument("spec")
    plot.add_argument("--output")
    plot.set_defaults(handler=cmd_plot)

    graph = commands.add_parser("graph", help="build a topology and print its spectral summary")
    graph.add_argument("kind", choices=TOPOLOGY_KINDS)
    graph.add_argument("--n-agents", type=int)
    graph.add_argument("--degree", type=int)
    graph.add_argument("--rows", type=int)
    graph.add_argument("--cols", type=int)
    graph.add_argument("--radius", type=float)
    graph.add_argument("--edge-probability", type=float)
    graph.add_argument("--delay", type=int, default=0)
    graph.add_argument("--seed", type=int, default=0)
    graph.add_argument("--edges", help="also write the edge list to this file")
    graph.set_defaults(handler=cmd_graph)

    bound = commands.add_parser("bound", help="evaluate an analytic bound or export it as a curve CSV")
    bound.add_argument("name", choices=sorted(EVALUATORS))
    bound.add_argument("param", nargs="*", help="fixed parameters as key=value")
    bound.add_argument("--x", help="parameter swept along the curve")
    bound.add_argument("--grid", nargs=3, type=float, default=(1.0, 100.0, 50), metavar=("START", "STOP", "COUNT"))
    bound.add_argument("--output", default="curve.csv")
    bound.set_defaults(handler=cmd_bound)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        message = args.handler(args)
    except ConfigError as e:
        logger.error("config error: %s", e)
        return EXIT_CONFIG
    except NumericError as e:
        logger.error("numeric error: %s", e)
        return EXIT_NUMERIC
    except (MaclabError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_ERROR
    print(message)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
