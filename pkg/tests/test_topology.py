import numpy as np
import pytest

from conftest import random_connected_graph
from gnesim.errors import ConfigurationError, ValidationError
from gnesim.topology import (
    ClusterLayout,
    Graph,
    benchmark_topology,
    build_metropolis,
    consensus_contraction,
    laplacian_from_mixing,
    network_from_edges,
    validate_doubly_stochastic,
)


def test_layout_flat_indexing_is_a_bijection():
    layout = ClusterLayout((3, 3, 1))
    assert layout.n == 7
    assert layout.num_clusters == 3
    seen = set()
    for cluster, member in layout.agents():
        flat = layout.flat_index(cluster, member)
        assert layout.unflatten(flat) == (cluster, member)
        seen.add(flat)
    assert seen == set(range(7))


def test_layout_rejects_bad_sizes():
    with pytest.raises(ConfigurationError):
        ClusterLayout(())
    with pytest.raises(ConfigurationError):
        ClusterLayout((2, 0))
    with pytest.raises(ConfigurationError):
        ClusterLayout((3,)).flat_index(0, 3)


def test_graph_connectivity():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    assert g.is_connected()
    assert not Graph.from_edges(4, [(0, 1), (2, 3)]).is_connected()
    assert Graph.from_edges(1, []).is_connected()
    with pytest.raises(ConfigurationError):
        Graph.from_edges(3, [(1, 1)])


def test_metropolis_two_node_complete_graph():
    w = build_metropolis(Graph.from_edges(2, [(0, 1)]))
    assert np.allclose(w.entries, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_metropolis_three_node_path():
    # Degrees 1, 2, 1: edge weight 1/(1 + max degree) = 1/3, end diagonals 2/3.
    w = build_metropolis(Graph.from_edges(3, [(0, 1), (1, 2)]))
    expected = np.array([[2 / 3, 1 / 3, 0.0], [1 / 3, 1 / 3, 1 / 3], [0.0, 1 / 3, 2 / 3]])
    assert np.allclose(w.entries, expected, atol=1e-15)


def test_metropolis_rejects_disconnected_graph():
    with pytest.raises(ConfigurationError):
        build_metropolis(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_validate_doubly_stochastic_cases():
    assert validate_doubly_stochastic(np.eye(3))
    # Column sums are 1 but row sums are 1.1 and 0.9.
    assert not validate_doubly_stochastic(np.array([[0.9, 0.2], [0.1, 0.8]]))
    assert not validate_doubly_stochastic(np.array([[1.5, -0.5], [-0.5, 1.5]]))
    with pytest.raises(ValidationError):
        validate_doubly_stochastic(np.ones((2, 3)))


def test_metropolis_random_graphs_properties():
    rng = np.random.default_rng(7)
    for _ in range(20):
        node_count = int(rng.integers(2, 12))
        graph = Graph.from_edges(node_count, random_connected_graph(rng, node_count))
        w = build_metropolis(graph)
        assert validate_doubly_stochastic(w.entries)
        # Sparsity: positive entries only on edges or the diagonal.
        for u in range(node_count):
            for v in range(node_count):
                if u == v:
                    assert w.entries[u, v] >= w.min_positive - 1e-15
                elif (min(u, v), max(u, v)) in graph.edges:
                    assert w.entries[u, v] >= w.min_positive - 1e-15
                else:
                    assert w.entries[u, v] == 0.0
        # Disagreement contraction below 1; cross-check power iteration
        # against a dense eigendecomposition.
        lam = consensus_contraction(w.entries)
        ones = np.ones((node_count, node_count)) / node_count
        lam_ref = max(abs(np.linalg.eigvalsh(w.entries - ones)))
        assert lam < 1.0
        assert abs(lam - lam_ref) < 1e-8


def test_laplacian_of_identity_is_zero():
    w = build_metropolis(Graph.from_edges(1, []))
    assert np.array_equal(w.entries, [[1.0]])
    lap = laplacian_from_mixing(w)
    assert np.array_equal(lap.entries, [[0.0]])


def test_laplacian_two_node_values_and_norm():
    w = build_metropolis(Graph.from_edges(2, [(0, 1)]))
    lap = laplacian_from_mixing(w)
    assert np.allclose(lap.entries, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)
    # Hand eigendecomposition: eigenvalues 0 and 1.
    assert np.linalg.norm(lap.entries, 2) == pytest.approx(1.0, abs=1e-12)


def test_laplacian_rows_sum_to_zero_and_norm_below_two():
    rng = np.random.default_rng(11)
    for _ in range(10):
        node_count = int(rng.integers(2, 10))
        graph = Graph.from_edges(node_count, random_connected_graph(rng, node_count))
        lap = laplacian_from_mixing(build_metropolis(graph))
        assert np.max(np.abs(lap.entries @ np.ones(node_count))) <= 1e-12
        assert np.allclose(lap.entries, lap.entries.T)
        assert np.linalg.norm(lap.entries, 2) <= 2.0 + 1e-12


def test_laplacian_rejects_non_stochastic_input():
    from gnesim.topology import MixingMatrix

    with pytest.raises(ValidationError):
        MixingMatrix(entries=np.array([[0.9, 0.2], [0.1, 0.8]]), min_positive=0.1)


def test_benchmark_topology_structure():
    net = benchmark_topology()
    assert net.layout.cluster_sizes == (3, 3, 1)
    assert net.layout.n == 7
    assert net.graph.is_connected()
    for g in net.cluster_graphs:
        assert g.is_connected()
    expected = {(0, 1), (1, 2), (3, 4), (4, 5), (2, 3), (2, 6), (3, 6)}
    assert set(net.graph.edges) == expected


def test_benchmark_topology_bridge_redundancy():
    # Dropping the direct bridge between the first two clusters keeps the
    # global graph connected through the third cluster's agent.
    net = benchmark_topology()
    reduced = set(net.graph.edges) - {(2, 3)}
    g = Graph.from_edges(7, reduced)
    assert g.is_connected()


def test_network_from_edges_induces_cluster_graphs():
    net = network_from_edges((2, 2), [(0, 1), (2, 3), (1, 2)])
    assert net.cluster_graphs[0].edges == frozenset({(0, 1)})
    assert net.cluster_graphs[1].edges == frozenset({(0, 1)})
    with pytest.raises(ConfigurationError):
        # Second cluster has no internal edge, so its graph is disconnected.
        network_from_edges((2, 2), [(0, 1), (1, 2), (1, 3)])
