"""Cluster layout, communication graphs, mixing matrices and the graph Laplacian.

All agent indices are 0-based.  An agent is addressed either by a
``(cluster, member)`` pair or by its flat index
``offset(cluster) + member``; flat indices enumerate agents cluster by
cluster.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ValidationError

# Tolerance for row/column stochasticity checks (double precision, n <= hundreds).
STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class ClusterLayout:
    """Partition of agents into clusters with flat global indexing."""

    cluster_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.cluster_sizes)
        if not sizes:
            raise ConfigurationError("at least one cluster is required")
        if any(s < 1 for s in sizes):
            raise ConfigurationError(f"cluster sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "cluster_sizes", sizes)

    @property
    def num_clusters(self) -> int:
        return len(self.cluster_sizes)

    @property
    def n(self) -> int:
        return sum(self.cluster_sizes)

    def offset(self, cluster: int) -> int:
        return sum(self.cluster_sizes[:cluster])

    def flat_index(self, cluster: int, member: int) -> int:
        if not 0 <= cluster < self.num_clusters:
            raise ConfigurationError(f"cluster {cluster} out of range")
        if not 0 <= member < self.cluster_sizes[cluster]:
            raise ConfigurationError(f"member {member} out of range for cluster {cluster}")
        return self.offset(cluster) + member

    def unflatten(self, agent: int) -> tuple[int, int]:
        if not 0 <= agent < self.n:
            raise ConfigurationError(f"agent {agent} out of range")
        for cluster, size in enumerate(self.cluster_sizes):
            if agent < size:
                return cluster, agent
            agent -= size
        raise AssertionError("unreachable")

    def agents(self):
        """Yield (cluster, member) pairs in flat order."""
        for cluster, size in enumerate(self.cluster_sizes):
            for member in range(size):
                yield cluster, member

    def cluster_slice(self, cluster: int) -> slice:
        off = self.offset(cluster)
        return slice(off, off + self.cluster_sizes[cluster])


def _normalize_edge(u, v):
    u, v = int(u), int(v)
    if u == v:
        raise ConfigurationError(f"self-loop ({u},{v}) not allowed; self-weights live in the mixing matrix")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Undirected graph on nodes 0..node_count-1 without explicit self-loops."""

    node_count: int
    edges: frozenset

    @classmethod
    def from_edges(cls, node_count: int, edges) -> "Graph":
        node_count = int(node_count)
        if node_count < 1:
            raise ConfigurationError("graph needs at least one node")
        normalized = set()
        for u, v in edges:
            e = _normalize_edge(u, v)
            if not (0 <= e[0] < node_count and 0 <= e[1] < node_count):
                raise ConfigurationError(f"edge {e} out of range for {node_count} nodes")
            normalized.add(e)
        return cls(node_count=node_count, edges=frozenset(normalized))

    def neighbors(self, u: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == u:
                out.append(b)
            elif b == u:
                out.append(a)
        return sorted(out)

    def degree(self, u: int) -> int:
        return sum(1 for a, b in self.edges if u in (a, b))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.node_count, self.node_count))
        for u, v in self.edges:
            adj[u, v] = adj[v, u] = 1.0
        return adj

    def is_connected(self) -> bool:
        if self.node_count == 1:
            return True
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.node_count


@dataclass(frozen=True)
class MixingMatrix:
    """Doubly stochastic averaging matrix conforming to a communication graph."""

    entries: np.ndarray
    min_positive: float

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError("mixing matrix must be square")
        if not validate_doubly_stochastic(entries):
            raise ValidationError("mixing matrix is not doubly stochastic")
        if self.min_positive <= 0:
            raise ValidationError("min_positive must be > 0")

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class LaplacianMatrix:
    """Graph Laplacian L = I - W of a doubly stochastic mixing matrix."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", entries)
        n = entries.shape[0]
        if entries.shape != (n, n):
            raise ValidationError("Laplacian must be square")
        if np.max(np.abs(entries @ np.ones(n))) > STOCHASTIC_TOL:
            raise ValidationError("Laplacian rows must sum to zero")


def validate_doubly_stochastic(matrix, tol: float = STOCHASTIC_TOL) -> bool:
    """True iff the matrix is nonnegative with all row and column sums within tol of 1."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("expected a square matrix")
    if np.any(m < 0):
        return False
    ones = np.ones(m.shape[0])
    return bool(
        np.max(np.abs(m @ ones - ones)) <= tol and np.max(np.abs(m.T @ ones - ones)) <= tol
    )


def build_metropolis(graph: Graph) -> MixingMatrix:
    """Metropolis-weights mixing matrix: edge weight 1/(1 + max degree of endpoints).

    The diagonal absorbs the remaining mass so that every row (and, by
    symmetry, column) sums to one.
    """
    if not graph.is_connected():
        raise ConfigurationError("Metropolis weights require a connected graph")
    n = graph.node_count
    w = np.zeros((n, n))
    for u, v in graph.edges:
        w[u, v] = w[v, u] = 1.0 / (1.0 + max(graph.degree(u), graph.degree(v)))
    for u in range(n):
        w[u, u] = 1.0 - np.sum(w[u]) + w[u, u]
    off_diag = [w[u, v] for u, v in graph.edges]
    min_positive = min(np.min(np.diag(w)), min(off_diag) if off_diag else 1.0)
    return MixingMatrix(entries=w, min_positive=float(min_positive))


def laplacian_from_mixing(mixing: MixingMatrix) -> LaplacianMatrix:
    """L = I - W for a doubly stochastic W; rows sum to zero and the operator norm is <= 2."""
    w = mixing.entries
    return LaplacianMatrix(entries=np.eye(w.shape[0]) - w)


def consensus_contraction(matrix, iterations: int = 500) -> float:
    """Largest-magnitude eigenvalue of W - (1/n) 11^T, by power iteration.

    Strictly below 1 for the mixing matrix of a connected graph; this is the
    per-step contraction factor of the disagreement dynamics.
    """
    w = np.asarray(matrix, dtype=float)
    n = w.shape[0]
    if n == 1:
        return 0.0
    d = w - np.ones((n, n)) / n
    # Deterministic start vector with a nonzero component along every eigenvector.
    v = np.cos(np.arange(1, n + 1, dtype=float))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        u = d @ v
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        v = u / norm
        lam = norm
    return float(lam)


@dataclass(frozen=True)
class Network:
    """Cluster layout plus the global and per-cluster communication graphs.

    ``graph`` uses flat agent indices; each ``cluster_graphs[i]`` uses local
    member indices 0..n_i-1.  Every graph must be connected.
    """

    layout: ClusterLayout
    graph: Graph
    cluster_graphs: tuple

    def __post_init__(self):
        if self.graph.node_count != self.layout.n:
            raise ConfigurationError("global graph size does not match the layout")
        if len(self.cluster_graphs) != self.layout.num_clusters:
            raise ConfigurationError("need one graph per cluster")
        if not self.graph.is_connected():
            raise ConfigurationError("global communication graph must be connected")
        for i, g in enumerate(self.cluster_graphs):
            if g.node_count != self.layout.cluster_sizes[i]:
                raise ConfigurationError(f"cluster graph {i} size mismatch")
            if not g.is_connected():
                raise ConfigurationError(f"cluster graph {i} must be connected")


def network_from_edges(cluster_sizes, edges) -> Network:
    """Build a Network from cluster sizes and a global edge list.

    Intra-cluster edges induce the per-cluster graphs (re-indexed locally);
    edges across clusters belong to the global graph only.
    """
    layout = ClusterLayout(tuple(cluster_sizes))
    graph = Graph.from_edges(layout.n, edges)
    cluster_graphs = []
    for i in range(layout.num_clusters):
        off = layout.offset(i)
        size = layout.cluster_sizes[i]
        local = [
            (u - off, v - off)
            for u, v in graph.edges
            if off <= u < off + size and off <= v < off + size
        ]
        cluster_graphs.append(Graph.from_edges(size, local))
    return Network(layout=layout, graph=graph, cluster_graphs=tuple(cluster_graphs))


def benchmark_topology() -> Network:
    """Built-in 3-cluster, 7-agent network used by the bundled benchmark game.

    Clusters of sizes (3, 3, 1); paths 0-1-2 and 3-4-5 inside the first two
    clusters; a triangle among the bridge agents 2, 3 and 6 connects the
    clusters.
    """
    edges = [(0, 1), (1, 2), (3, 4), (4, 5), (2, 3), (2, 6), (3, 6)]
    return network_from_edges((3, 3, 1), edges)
