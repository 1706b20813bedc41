import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.exceptions import GraphConstructionError, ProtocolError
from app.net.graph import (
    CommGraph,
    GossipMatrix,
    algebraic_connectivity,
    build_topology,
    expected_pairwise_gossip,
    independence_number,
    laplacian_spectrum,
    max_degree_gossip,
    read_edge_list,
    second_eigenvalue,
    select_centers,
    sigma2,
    spectral_summary,
    write_edge_list,
)
from app.net.inbox import DelayedInbox, delayed_receive, delayed_send


def test_complete_graph_edges():
    """K_4 has six edges and degree three everywhere"""
    g = build_topology("complete", n_agents=4)
    assert len(g.edges) == 6
    assert all(g.degree(v) == 3 for v in range(4))


def test_star_graph():
    """Star on 20 agents: 19 edges, hub degree 19"""
    g = build_topology("star", n_agents=20)
    assert len(g.edges) == 19
    assert g.degree(0) == 19
    assert g.max_degree == 19


def test_grid_edges():
    """6x6 grid has 60 edges"""
    g = build_topology("grid", rows=6, cols=6)
    assert g.n_agents == 36
    assert len(g.edges) == 60


def test_r_regular_circulant():
    """Circulants are r-regular for even and odd r"""
    for n, r in [(6, 2), (6, 3), (6, 4), (6, 5), (3, 2)]:
        g = build_topology("r_regular", n_agents=n, degree=r)
        assert {g.degree(v) for v in range(n)} == {r}


def test_r_regular_infeasible():
    """r >= N and odd r on odd N are rejected"""
    with pytest.raises(GraphConstructionError):
        build_topology("r_regular", n_agents=4, degree=4)
    with pytest.raises(GraphConstructionError):
        build_topology("r_regular", n_agents=5, degree=3)


def test_random_topologies_connected_and_deterministic():
    """Erdos-Renyi and RGG builders return the same connected graph for the same seed"""
    for kind, extra in [("erdos_renyi", {}), ("rgg", {"radius": 0.5})]:
        a = build_topology(kind, n_agents=20, seed=7, **extra)
        b = build_topology(kind, n_agents=20, seed=7, **extra)
        assert a.edges == b.edges
        assert a.is_connected()


def test_rgg_radius_out_of_range():
    """RGG radius must lie in (0, sqrt 2]"""
    with pytest.raises(GraphConstructionError):
        build_topology("rgg", n_agents=10, radius=1.5)


def test_comm_graph_rejects_self_loops():
    """Self-loops are not simple"""
    with pytest.raises(GraphConstructionError):
        CommGraph(3, frozenset({(1, 1)}))


def test_neighborhood_conventions(path3):
    """Closed neighborhoods add the agent itself"""
    assert path3.neighbors(1) == (0, 2)
    assert path3.neighbors(1, include_self=True) == (0, 1, 2)


def test_laplacian_spectrum_examples(k4, path3):
    """K_4 -> {4,4,4,0}, path -> {3,1,0}, single edge -> {2,0}"""
    assert np.allclose(laplacian_spectrum(k4), [4, 4, 4, 0], atol=1e-9)
    assert np.allclose(laplacian_spectrum(path3), [3, 1, 0], atol=1e-9)
    edge = CommGraph(2, frozenset({(0, 1)}))
    assert np.allclose(laplacian_spectrum(edge), [2, 0], atol=1e-9)


def test_spectrum_matches_general_eigensolver():
    """Symmetric eigenvalues agree with a general dense solve on small graphs"""
    for n in range(2, 7):
        g = build_topology("erdos_renyi", n_agents=n, edge_probability=0.6, seed=n)
        reference = np.sort(np.real(np.linalg.eigvals(g.laplacian())))[::-1]
        assert np.allclose(laplacian_spectrum(g), reference, atol=1e-7)


def test_path_spectrum_matches_characteristic_polynomial(path3):
    """Distinct eigenvalues of the path are the roots of its characteristic polynomial"""
    roots = np.sort(np.real(np.roots(np.poly(path3.laplacian()))))[::-1]
    assert np.allclose(laplacian_spectrum(path3), roots, atol=1e-7)


def test_algebraic_connectivity_positive_for_connected(path3):
    """lambda_{N-1}(M) > 0 for a connected graph"""
    assert algebraic_connectivity(path3) == pytest.approx(1.0)
    summary = spectral_summary(path3)
    assert summary.laplacian_eigenvalues[-1] == pytest.approx(0.0, abs=1e-9)
    assert summary.laplacian_eigenvalues.min() >= -1e-9


def test_max_degree_gossip_examples(k4):
    """K_2, K_4 and star N=3 gossip matrices match the formula"""
    k2 = CommGraph(2, frozenset({(0, 1)}))
    assert np.allclose(max_degree_gossip(k2).entries, [[0.75, 0.25], [0.25, 0.75]])
    assert sigma2(max_degree_gossip(k2)) == pytest.approx(0.5)

    w = max_degree_gossip(k4).entries
    assert np.allclose(np.diag(w), 5 / 8)
    assert w[0, 1] == pytest.approx(1 / 8)
    assert sigma2(max_degree_gossip(k4)) == pytest.approx(0.5)

    star = build_topology("star", n_agents=3)
    w = max_degree_gossip(star).entries
    assert w[0, 0] == pytest.approx(4 / 6)
    assert w[1, 1] == pytest.approx(5 / 6)
    assert w[0, 1] == pytest.approx(1 / 6)


def test_sigma2_extremes():
    """Uniform averaging gives 0, identity gives 1"""
    assert sigma2(np.full((4, 4), 0.25)) == pytest.approx(0.0, abs=1e-9)
    assert sigma2(np.eye(4)) == pytest.approx(1.0)


def test_gossip_rejects_support_outside_edges(path3):
    """A weight between non-adjacent agents is invalid"""
    w = np.full((3, 3), 1 / 3)
    with pytest.raises(GraphConstructionError):
        GossipMatrix(w).validate(path3)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(min_value=2, max_value=12), seed=st.integers(min_value=0, max_value=10_000))
def test_gossip_invariants(n, seed):
    """Max-degree gossip is doubly stochastic, non-negative and its spectral gap dominates lambda/(2(1+d_max))"""
    g = build_topology("erdos_renyi", n_agents=n, edge_probability=0.5, seed=seed)
    w = max_degree_gossip(g).entries
    assert np.abs(w.sum(axis=0) - 1).max() <= 1e-12
    assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12
    assert w.min() >= 0
    for u, v in itertools.combinations(range(n), 2):
        assert (w[u, v] != 0) == g.has_edge(u, v)
    gap = 1 - sigma2(max_degree_gossip(g))
    assert gap >= algebraic_connectivity(g) / (2 * (1 + g.max_degree)) - 1e-9


def test_independence_number_examples(k4):
    """K_N -> 1, star N -> N-1, C_5 -> 2"""
    assert independence_number(k4) == (1, True)
    assert independence_number(build_topology("star", n_agents=5)) == (4, True)
    c5 = build_topology("r_regular", n_agents=5, degree=2)
    assert independence_number(c5) == (2, True)


def test_independence_number_greedy_fallback():
    """Above the exact limit the flag reports a lower bound"""
    value, exact = independence_number(build_topology("star", n_agents=30), exact_limit=10)
    assert not exact
    assert value == 29


def test_select_centers_examples(k4):
    """Star -> hub, path of 5 -> middle node, complete -> one center"""
    star = select_centers(build_topology("star", n_agents=20), n_arms=5)
    assert star.centers == (0,)
    assert all(star.hop_distance[v] == 1 for v in range(1, 20))
    assert star.mass(0) == pytest.approx(5)

    path5 = CommGraph(5, frozenset({(0, 1), (1, 2), (2, 3), (3, 4)}))
    centers = select_centers(path5, n_arms=3)
    assert centers.centers == (2,)
    assert centers.hop_distance[0] == centers.hop_distance[4] == 2
    assert centers.mass(0) == pytest.approx(np.exp(-2 / 6) * 3)

    assert len(select_centers(k4, n_arms=2).centers) == 1


def test_select_centers_prefers_degree_over_centrality():
    """Path 0-4 with three leaves on node 4: the degree-4 end is picked before the middle"""
    edges = {(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (4, 6), (4, 7)}
    assignment = select_centers(CommGraph(8, frozenset(edges)), n_arms=3)
    assert assignment.centers == (1, 4)
    assert assignment.center_of[2] == 1 and assignment.hop_distance[2] == 1
    assert assignment.center_of[3] == 4


def test_select_centers_hops_are_bfs_distances():
    """Every agent maps to one center at its exact BFS distance"""
    g = build_topology("grid", rows=5, cols=5)
    assignment = select_centers(g, n_arms=4)
    lengths = dict(nx.all_pairs_shortest_path_length(g.nx_graph))
    for v in range(g.n_agents):
        c = assignment.center_of[v]
        assert assignment.is_center(c)
        assert assignment.hop_distance[v] == lengths[v][c]
    assert sorted(v for c in assignment.centers for v in assignment.component(c)) == list(range(g.n_agents))


def test_edge_list_export_import(tmp_path, star5):
    """Export is lexicographic and reads back to the same graph"""
    path = tmp_path / "star.edges"
    write_edge_list(star5, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "5 1"
    assert lines[1:] == ["0 1", "0 2", "0 3", "0 4"]
    assert read_edge_list(path) == star5


def test_expected_pairwise_gossip_second_eigenvalue(k4):
    """Without skipping, E[W] has lambda_2 = 1 - lambda_{N-1}(M)/|E|"""
    matrix = expected_pairwise_gossip(k4, skip_alpha=0.0, horizon=100)
    assert second_eigenvalue(matrix) == pytest.approx(1 - 4 / 6)


def test_inbox_delay_one():
    """d=1: a message sent at t=5 is visible at t=6, not at t=5"""
    g = CommGraph(2, frozenset({(0, 1)}), edge_delay=1)
    inbox = DelayedInbox(g)
    delayed_send(inbox, (0, 1), 5, "m")
    assert delayed_receive(inbox, 1, 5) == []
    assert delayed_receive(inbox, 1, 6) == ["m"]


def test_inbox_empty_before_delay():
    """d=3: nothing is readable at t=3"""
    g = CommGraph(2, frozenset({(0, 1)}), edge_delay=3)
    inbox = DelayedInbox(g)
    assert delayed_receive(inbox, 0, 3) == []


def test_inbox_fifo_order():
    """Sends at t=2 and t=3 with d=2 arrive at t=4 and t=5 in order"""
    g = CommGraph(2, frozenset({(0, 1)}), edge_delay=2)
    inbox = DelayedInbox(g)
    delayed_send(inbox, (0, 1), 2, "a")
    delayed_send(inbox, (0, 1), 3, "b")
    assert delayed_receive(inbox, 1, 4) == ["a"]
    assert delayed_receive(inbox, 1, 5) == ["b"]
    assert inbox.sent == inbox.delivered + inbox.in_flight


def test_inbox_rejects_non_edge(path3):
    """Sending between non-neighbors violates the protocol"""
    inbox = DelayedInbox(path3)
    with pytest.raises(ProtocolError):
        delayed_send(inbox, (0, 2), 1, "x")
