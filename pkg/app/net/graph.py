"""Communication topologies and the graph quantities the learning rates consume."""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from app.core.config import settings, tolerances
from app.core.exceptions import GraphConstructionError

logger = logging.getLogger(__name__)

TOPOLOGY_KINDS = ("complete", "r_regular", "star", "grid", "erdos_renyi", "rgg")
MAX_RESAMPLES = 1000

Edge = Tuple[int, int]


@dataclass(frozen=True)
class CommGraph:
    """Undirected simple graph over agents 0..n_agents-1 with a uniform edge delay"""

    n_agents: int
    edges: FrozenSet[Edge]
    edge_delay: int = 0

    def __post_init__(self):
        if self.n_agents < 1:
            raise GraphConstructionError("n_agents must be positive")
        if self.edge_delay < 0:
            raise GraphConstructionError("edge_delay must be non-negative")
        normalized = set()
        for u, v in self.edges:
            if u == v:
                raise GraphConstructionError(f"self-loop on agent {u}")
            if not (0 <= u < self.n_agents and 0 <= v < self.n_agents):
                raise GraphConstructionError(f"edge ({u}, {v}) outside 0..{self.n_agents - 1}")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_networkx(cls, graph: nx.Graph, edge_delay: int = 0) -> "CommGraph":
        """Build from a networkx graph whose nodes are 0..n-1"""
        return cls(graph.number_of_nodes(), frozenset((int(u), int(v)) for u, v in graph.edges()), edge_delay)

    @cached_property
    def nx_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_agents))
        graph.add_edges_from(sorted(self.edges))
        return graph

    @cached_property
    def _adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        neighbors: List[List[int]] = [[] for _ in range(self.n_agents)]
        for u, v in self.edges:
            neighbors[u].append(v)
            neighbors[v].append(u)
        return tuple(tuple(sorted(n)) for n in neighbors)

    @property
    def edge_list(self) -> List[Edge]:
        """Edges in lexicographic order"""
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def degree(self, v: int) -> int:
        return len(self._adjacency[v])

    @property
    def max_degree(self) -> int:
        return max(self.degree(v) for v in range(self.n_agents))

    def neighbors(self, v: int, include_self: bool = False) -> Tuple[int, ...]:
        """N(v); include_self selects the closed neighborhood convention"""
        if include_self:
            return tuple(sorted(self._adjacency[v] + (v,)))
        return self._adjacency[v]

    def is_connected(self) -> bool:
        return nx.is_connected(self.nx_graph)

    def laplacian(self) -> np.ndarray:
        return nx.laplacian_matrix(self.nx_graph, nodelist=range(self.n_agents)).toarray().astype(float)


@dataclass(frozen=True, eq=False)
class GossipMatrix:
    """Symmetric doubly stochastic mixing matrix supported on graph edges"""

    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def validate(self, graph: Optional[CommGraph] = None) -> None:
        w = self.entries
        tol = tolerances.simplex_sum
        if not np.allclose(w, w.T, atol=tol, rtol=0.0):
            raise GraphConstructionError("gossip matrix is not symmetric")
        if w.min() < 0:
            raise GraphConstructionError("gossip matrix has negative entries")
        if np.abs(w.sum(axis=0) - 1).max() > tol or np.abs(w.sum(axis=1) - 1).max() > tol:
            raise GraphConstructionError("gossip matrix is not doubly stochastic")
        if graph is not None:
            for u in range(graph.n_agents):
                for v in range(graph.n_agents):
                    if u != v and not graph.has_edge(u, v) and w[u, v] != 0:
                        raise GraphConstructionError(f"non-zero weight on non-edge ({u}, {v})")


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    laplacian_eigenvalues: np.ndarray
    algebraic_connectivity: float
    independence_number: int
    independence_exact: bool
    sigma2_gossip: Optional[float] = None

    def as_dict(self) -> Dict[str, object]:
        return {
            "laplacian_eigenvalues": [float(x) for x in self.laplacian_eigenvalues],
            "algebraic_connectivity": self.algebraic_connectivity,
            "independence_number": self.independence_number,
            "independence_exact": self.independence_exact,
            "sigma2_gossip": self.sigma2_gossip,
        }


@dataclass(frozen=True)
class CenterAssignment:
    """Center agents, the partition they induce and the mass each agent inherits"""

    centers: Tuple[int, ...]
    center_of: Tuple[int, ...]
    hop_distance: Tuple[int, ...]
    center_mass: Dict[int, int] = field(default_factory=dict)

    def is_center(self, v: int) -> bool:
        return self.center_of[v] == v

    def mass(self, v: int) -> float:
        """M(v) = exp(-d(v)/6) * M(C(v))"""
        return math.exp(-self.hop_distance[v] / 6.0) * self.center_mass[self.center_of[v]]

    def component(self, c: int) -> List[int]:
        return [v for v, owner in enumerate(self.center_of) if owner == c]


def _connected_sample(kind: str, make, seed: int) -> nx.Graph:
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_RESAMPLES):
        candidate = make(int(rng.integers(2**32)))
        if nx.is_connected(candidate):
            if attempt:
                logger.debug("%s graph connected after %d resamples", kind, attempt)
            return candidate
    raise GraphConstructionError(f"{kind} graph not connected after {MAX_RESAMPLES} resamples")


def circulant_offsets(n_agents: int, degree: int) -> List[int]:
    """Ring offsets realizing an r-regular circulant; odd r needs the antipodal offset"""
    if degree < 1 or degree >= n_agents:
        raise GraphConstructionError(f"r_regular needs 1 <= r < N, got r={degree}, N={n_agents}")
    if degree % 2 and n_agents % 2:
        raise GraphConstructionError("odd r needs an even number of agents")
    offsets = list(range(1, degree // 2 + 1))
    if degree % 2:
        offsets.append(n_agents // 2)
    return offsets


def build_topology(
    kind: str,
    *,
    n_agents: Optional[int] = None,
    degree: Optional[int] = None,
    rows: Optional[int] = None,
    cols: Optional[int] = None,
    radius: Optional[float] = None,
    edge_probability: Optional[float] = None,
    delay: int = 0,
    seed: int = 0,
) -> CommGraph:
    """Build a connected communication graph of the given kind"""
    if kind not in TOPOLOGY_KINDS:
        raise GraphConstructionError(f"unknown topology kind '{kind}'")
    if kind == "grid":
        if not rows or not cols or rows < 1 or cols < 1:
            raise GraphConstructionError("grid needs positive rows and cols")
        graph = nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols), ordering="sorted")
    else:
        if not n_agents or n_agents < 1:
            raise GraphConstructionError(f"{kind} needs a positive n_agents")
        if kind == "complete":
            graph = nx.complete_graph(n_agents)
        elif kind == "star":
            graph = nx.star_graph(n_agents - 1)
        elif kind == "r_regular":
            if degree is None:
                raise GraphConstructionError("r_regular needs a degree")
            graph = nx.circulant_graph(n_agents, circulant_offsets(n_agents, degree))
        elif kind == "erdos_renyi":
            p = edge_probability
            if p is None:
                p = min(1.0, 2.0 * math.log(n_agents) / n_agents) if n_agents > 1 else 0.0
            if not 0.0 <= p <= 1.0:
                raise GraphConstructionError("edge probability must lie in [0, 1]")
            graph = _connected_sample(kind, lambda s: nx.erdos_renyi_graph(n_agents, p, seed=s), seed)
        else:
            if radius is None or not 0.0 < radius <= math.sqrt(2.0):
                raise GraphConstructionError("rgg radius must lie in (0, sqrt(2)]")
            graph = _connected_sample(kind, lambda s: nx.random_geometric_graph(n_agents, radius, seed=s), seed)
    if not nx.is_connected(graph):
        raise GraphConstructionError(f"{kind} graph is not connected")
    comm = CommGraph.from_networkx(graph, edge_delay=delay)
    logger.debug("built %s graph: %d agents, %d edges", kind, comm.n_agents, len(comm.edges))
    return comm


def laplacian_spectrum(graph: CommGraph) -> np.ndarray:
    """Eigenvalues of M = D - A in descending order"""
    values = np.linalg.eigvalsh(graph.laplacian())
    return values[::-1].copy()


def algebraic_connectivity(graph: CommGraph) -> float:
    """lambda_{N-1}(M); zero for a single agent"""
    if graph.n_agents < 2:
        return 0.0
    return float(laplacian_spectrum(graph)[-2])


def max_degree_gossip(graph: CommGraph) -> GossipMatrix:
    """W = I - (D - A) / (2 (1 + d_max))"""
    d_max = graph.max_degree
    entries = np.eye(graph.n_agents) - graph.laplacian() / (2.0 * (1.0 + d_max))
    gossip = GossipMatrix(entries)
    gossip.validate(graph)
    return gossip


def sigma2(gossip: Union[GossipMatrix, np.ndarray]) -> float:
    """Second largest singular value"""
    w = gossip.entries if isinstance(gossip, GossipMatrix) else np.asarray(gossip, dtype=float)
    if w.shape[0] < 2:
        return 0.0
    singular = np.linalg.svd(w, compute_uv=False)
    return float(min(1.0, max(0.0, singular[1])))


def _greedy_independent_set(graph: nx.Graph) -> List[int]:
    remaining = graph.copy()
    chosen = []
    while remaining.number_of_nodes():
        v = min(remaining.nodes, key=lambda u: (remaining.degree(u), u))
        chosen.append(v)
        remaining.remove_nodes_from(list(remaining.neighbors(v)) + [v])
    return chosen


def independence_number(graph: CommGraph, exact_limit: Optional[int] = None) -> Tuple[int, bool]:
    """alpha(G) and whether it is exact (else a greedy lower bound)"""
    limit = settings.INDEPENDENCE_EXACT_LIMIT if exact_limit is None else exact_limit
    if graph.n_agents <= limit:
        clique, _ = nx.max_weight_clique(nx.complement(graph.nx_graph), weight=None)
        return max(1, len(clique)), True
    logger.warning("independence number of %d-agent graph uses the greedy lower bound", graph.n_agents)
    return max(1, len(_greedy_independent_set(graph.nx_graph))), False


def spectral_summary(
    graph: CommGraph, gossip: Optional[GossipMatrix] = None, exact_limit: Optional[int] = None
) -> SpectralSummary:
    eigenvalues = laplacian_spectrum(graph)
    alpha, exact = independence_number(graph, exact_limit)
    return SpectralSummary(
        laplacian_eigenvalues=eigenvalues,
        algebraic_connectivity=float(eigenvalues[-2]) if graph.n_agents > 1 else 0.0,
        independence_number=alpha,
        independence_exact=exact,
        sigma2_gossip=sigma2(gossip) if gossip is not None else None,
    )


def select_centers(graph: CommGraph, n_arms: int, cover_radius: int = 2) -> CenterAssignment:
    """Greedy center selection followed by nearest-center BFS assignment.

    Each step picks the uncovered agent of maximum degree; ties go to the
    lower eccentricity, then the lower id. A center covers every agent within
    cover_radius hops.
    """
    g = graph.nx_graph
    eccentricity = nx.eccentricity(g) if graph.n_agents > 1 else {0: 0}
    order = sorted(range(graph.n_agents), key=lambda v: (-graph.degree(v), eccentricity[v], v))
    uncovered = set(range(graph.n_agents))
    centers: List[int] = []
    for v in order:
        if not uncovered:
            break
        if v not in uncovered:
            continue
        centers.append(v)
        ball = nx.single_source_shortest_path_length(g, v, cutoff=cover_radius)
        uncovered.difference_update(ball)

    distances = {c: nx.single_source_shortest_path_length(g, c) for c in centers}
    center_of = []
    hops = []
    for v in range(graph.n_agents):
        hop, owner = min((distances[c][v], c) for c in centers if v in distances[c])
        center_of.append(owner)
        hops.append(hop)
    mass = {c: min(len(graph.neighbors(c, include_self=True)), n_arms) for c in centers}
    return CenterAssignment(tuple(sorted(centers)), tuple(center_of), tuple(hops), mass)


def write_edge_list(graph: CommGraph, path: Union[str, Path]) -> None:
    lines = [f"{graph.n_agents} {graph.edge_delay}"] + [f"{u} {v}" for u, v in graph.edge_list]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path: Union[str, Path]) -> CommGraph:
    rows = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    if not rows or len(rows[0]) != 2:
        raise GraphConstructionError("edge list must start with 'n d'")
    try:
        n_agents, delay = int(rows[0][0]), int(rows[0][1])
        edges = frozenset((int(u), int(v)) for u, v in rows[1:])
    except ValueError as e:
        raise GraphConstructionError(f"malformed edge list: {e}") from e
    return CommGraph(n_agents, edges, delay)


def expected_pairwise_gossip(graph: CommGraph, skip_alpha: float, horizon: int) -> np.ndarray:
    """E[W_t] = I - (D - A) / (T^alpha |E|) for single-edge gossip that fires w.p. T^-alpha"""
    n_edges = len(graph.edges)
    if n_edges == 0:
        return np.eye(graph.n_agents)
    return np.eye(graph.n_agents) - graph.laplacian() / (horizon**skip_alpha * n_edges)


def second_eigenvalue(matrix: np.ndarray) -> float:
    """Second largest eigenvalue of a symmetric matrix"""
    values = np.linalg.eigvalsh(matrix)
    if len(values) < 2:
        return 1.0
    return float(values[-2])