"""Config-driven experiment runner: variants x algorithms x seeds."""
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.coop.simulation import run_cooperative
from app.core.config import settings
from app.core.exceptions import ConfigError, GraphConstructionError
from app.env.losses import LossTensor, bernoulli_linear_env, explicit_env, federated_activation_env
from app.env.oco import OcoProblem, oco_linear_env, oco_quadratic_env
from app.env.ratings import ratings_env
from app.fed.fedexp3 import run_fedexp3
from app.fed.fedoco import run_fedoco
from app.matching.chain import superepoch_chain
from app.matching.greedy_and import greedy_bayes_and
from app.matching.greedy_or import greedy_bayes_or
from app.matching.population import NodePopulation, random_matching_trace
from app.net.graph import CommGraph, build_topology, max_degree_gossip, sigma2, spectral_summary
from app.schemas.experiment import ExperimentConfig
from app.services.aggregate_service import aggregate_finals, aggregate_frames
from app.services.config_loader import expand_variants
from app.services.plot_service import plot_run
from app.utils.traces import (
    CHAIN_COLUMNS,
    COOP_COLUMNS,
    FEDOCO_COLUMNS,
    MATCHING_COLUMNS,
    trace_frame,
    write_trace,
)

logger = logging.getLogger(__name__)

TRACE_COLUMNS = {
    "coop": COOP_COLUMNS,
    "fedexp3": COOP_COLUMNS,
    "fedoco": FEDOCO_COLUMNS,
    "matching": MATCHING_COLUMNS,
    "chain": CHAIN_COLUMNS,
}


def to_builtin(value: Any) -> Any:
    """Convert numpy scalars and arrays (recursively) to JSON-friendly builtins"""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class SeedTask:
    variant: str
    algorithm: str
    seed: int
    config: ExperimentConfig


@dataclass
class SeedOutcome:
    variant: str
    algorithm: str
    seed: int
    rows: List[Dict[str, Any]]
    finals: Dict[str, float]
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RunSummary:
    output_dir: Path
    variants: List[str]
    trace_files: List[Path]
    summary_file: Path
    finals_file: Path
    finals: pd.DataFrame
    metadata: Dict[str, Any]
    plot_file: Optional[Path] = None


def build_graph(config: ExperimentConfig) -> CommGraph:
    topo = config.topology
    return build_topology(
        topo.kind,
        n_agents=topo.n_agents,
        degree=topo.degree,
        rows=topo.rows,
        cols=topo.cols,
        radius=topo.radius,
        edge_probability=topo.edge_probability,
        delay=topo.delay,
        seed=topo.seed,
    )


def build_tensor(config: ExperimentConfig, n_agents: int, seed: int) -> LossTensor:
    env = config.environment
    horizon = config.horizon
    if env.kind in ("bernoulli_linear", "federated_activation") and env.n_arms is None:
        raise ConfigError("n_arms is required", field="environment.n_arms")
    if env.kind in ("ratings", "explicit") and not env.path:
        raise ConfigError("path is required", field="environment.path")
    if env.kind == "bernoulli_linear":
        return bernoulli_linear_env(env.n_arms, horizon, seed, n_agents=n_agents)
    if env.kind == "federated_activation":
        return federated_activation_env(n_agents, env.n_arms, horizon, seed)
    if env.kind == "ratings":
        if env.n_arms is None:
            raise ConfigError("n_arms is required", field="environment.n_arms")
        return ratings_env(env.path, n_agents, env.n_arms, horizon)
    tensor = explicit_env(env.path)
    return tensor.truncated(horizon) if horizon and horizon < tensor.horizon else tensor


def build_problem(config: ExperimentConfig, n_agents: int, seed: int) -> OcoProblem:
    env = config.environment
    if env.dimension is None:
        raise ConfigError("dimension is required", field="environment.dimension")
    if env.kind == "oco_linear":
        return oco_linear_env(env.dimension, n_agents, config.horizon, seed)
    return oco_quadratic_env(env.dimension, n_agents, config.horizon, seed, radius=env.radius)


def run_seed(task: SeedTask) -> SeedOutcome:
    """One (variant, algorithm, seed) simulation; runs in a worker process"""
    config, seed, algorithm = task.config, task.seed, task.algorithm
    kind = config.kind
    metadata: Dict[str, Any] = {}

    if kind == "coop":
        graph = build_graph(config)
        # homogeneous losses are shared by all agents
        tensor = build_tensor(config, 1 if config.environment.kind == "bernoulli_linear" else graph.n_agents, seed)
        result = run_cooperative(
            algorithm, graph, tensor, seed, stride=config.stride, learning_rate=config.algorithm.learning_rate
        )
        rows, metadata = result.rows, result.metadata
        finals = {"avg_regret": result.average_regret, "max_regret": float(result.final_regret.max())}
    elif kind == "fedexp3":
        graph = build_graph(config)
        tensor = build_tensor(config, graph.n_agents, seed)
        gossip = max_degree_gossip(graph)
        result = run_fedexp3(
            tensor, seed, gossip=gossip, sigma2_value=sigma2(gossip), stride=config.stride, algorithm=algorithm
        )
        rows, metadata = result.rows, result.metadata
        finals = {"avg_regret": float(result.final_regret.mean()), "max_regret": float(result.final_regret.max())}
    elif kind == "fedoco":
        graph = build_graph(config)
        problem = build_problem(config, graph.n_agents, seed)
        result = run_fedoco(problem, graph, config.algorithm.skip_alpha, seed, stride=config.stride)
        rows, metadata = result.rows, result.metadata
        finals = {
            "avg_regret": float(result.final_regret.mean()),
            "max_regret": float(result.final_regret.max()),
            "Q_T": float(result.communication),
        }
    elif kind == "matching":
        spec = config.algorithm
        population = NodePopulation.sample(spec.n_nodes, spec.prior, seed)
        if algorithm == "random":
            trace = random_matching_trace(population, spec.value_fn, seed)
        elif spec.value_fn == "or":
            trace = greedy_bayes_or(population, seed, stride=config.stride)
        else:
            trace = greedy_bayes_and(population, seed, stride=config.stride)
        rows, metadata = trace.rows, trace.metadata
        finals = {"regret": trace.cumulative_regret(config.horizon), "tau": float(trace.tau)}
    else:
        spec = config.algorithm
        chain = superepoch_chain(spec.n_nodes, spec.prior, seed)
        rows = [
            dict(zip(CHAIN_COLUMNS, (s, regular, special))) for s, (regular, special) in enumerate(chain.states)
        ]
        finals = {"superepochs": float(chain.superepochs), "final_special": float(chain.states[-1][1])}

    return SeedOutcome(task.variant, algorithm, seed, list(rows), finals, to_builtin(metadata))


def worker_count(requested: int, tasks: int) -> int:
    cap = settings.MACLAB_THREADS or os.cpu_count() or 1
    return max(1, min(requested, cap, tasks))


class ExperimentService:
    """Runs an ExperimentConfig and writes traces, summaries and metadata"""

    def __init__(self, config: ExperimentConfig, output_dir: Optional[Path] = None):
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir)
        self.variants: List[Tuple[str, ExperimentConfig]] = expand_variants(config)
        self.check_topologies()

    def check_topologies(self) -> None:
        """Build each variant's graph once up front; unbuildable topologies are config errors"""
        for name, variant in self.variants:
            if variant.kind in ("matching", "chain"):
                continue
            try:
                build_graph(variant)
            except GraphConstructionError as e:
                field = "topology" if name == "base" else f"sweep[{name}].topology"
                raise ConfigError(str(e), field=field) from e

    def tasks(self) -> List[SeedTask]:
        return [
            SeedTask(name, algorithm, seed, variant)
            for name, variant in self.variants
            for algorithm in variant.algorithms
            for seed in variant.seeds
        ]

    def execute(self, tasks: List[SeedTask]) -> List[SeedOutcome]:
        """Run every task; results come back in task order regardless of worker count"""
        workers = worker_count(self.config.workers, len(tasks))
        logger.info("running %d seed tasks on %d worker(s)", len(tasks), workers)
        if workers == 1:
            return [run_seed(t) for t in tasks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_seed, tasks))

    def describe_variant(self, config: ExperimentConfig) -> Dict[str, Any]:
        """Derived graph constants recorded alongside the run"""
        if config.kind in ("matching", "chain"):
            return {}
        graph = build_graph(config)
        gossip = max_degree_gossip(graph) if config.kind == "fedexp3" else None
        summary = spectral_summary(graph, gossip)
        return {"n_agents": graph.n_agents, "n_edges": len(graph.edges), **summary.as_dict()}

    def run(self) -> RunSummary:
        outcomes = self.execute(self.tasks())
        columns = TRACE_COLUMNS[self.config.kind]
        trace_files: List[Path] = []
        summaries: List[pd.DataFrame] = []
        final_rows: List[Dict[str, Any]] = []
        metadata: Dict[str, Any] = {"config": self.config.model_dump(mode="json"), "variants": {}}

        by_group: Dict[Tuple[str, str], List[SeedOutcome]] = {}
        for outcome in outcomes:
            by_group.setdefault((outcome.variant, outcome.algorithm), []).append(outcome)

        for name, variant in self.variants:
            variant_dir = self.output_dir / name
            variant_frames: List[pd.DataFrame] = []
            variant_meta: Dict[str, Any] = {"config": variant.model_dump(mode="json"), "graph": {}, "runs": {}}
            variant_meta["graph"] = to_builtin(self.describe_variant(variant))
            for algorithm in variant.algorithms:
                frames = []
                for outcome in by_group.get((name, algorithm), []):
                    frame = trace_frame(outcome.rows, columns)
                    trace_files.append(write_trace(frame, variant_dir / algorithm / f"trace_seed{outcome.seed}.csv"))
                    frames.append(frame)
                    variant_meta["runs"].setdefault(algorithm, {})[str(outcome.seed)] = outcome.metadata
                    final_rows.extend(
                        {"variant": name, "algorithm": algorithm, "seed": outcome.seed, "metric": m, "value": v}
                        for m, v in outcome.finals.items()
                    )
                summary = aggregate_frames(frames)
                summary.insert(0, "algorithm", algorithm)
                variant_frames.append(summary)
            variant_summary = pd.concat(variant_frames, ignore_index=True)
            write_trace(variant_summary, variant_dir / "summary.csv")
            variant_summary.insert(0, "variant", name)
            summaries.append(variant_summary)
            metadata["variants"][name] = variant_meta

        summary_file = write_trace(pd.concat(summaries, ignore_index=True), self.output_dir / "summary.csv")
        finals = aggregate_finals(pd.DataFrame(final_rows))
        finals_file = write_trace(finals, self.output_dir / "finals.csv")
        metadata_file = self.output_dir / "metadata.json"
        metadata_file.write_text(json.dumps(to_builtin(metadata), indent=2, sort_keys=True) + "\n")

        plot_file = None
        if self.config.plot is not None:
            plot_file = plot_run(self.output_dir, self.config.plot)
        logger.info("wrote %d traces under %s", len(trace_files), self.output_dir)
        return RunSummary(
            output_dir=self.output_dir,
            variants=[n for n, _ in self.variants],
            trace_files=trace_files,
            summary_file=summary_file,
            finals_file=finals_file,
            finals=finals,
            metadata=metadata,
            plot_file=plot_file,
        )


def run_experiment(config: ExperimentConfig, output_dir: Optional[Path] = None) -> RunSummary:
    return ExperimentService(config, output_dir).run()
