import numpy as np
import pytest

from gnesim.game_model import GameDefinition
from gnesim.topology import ClusterLayout, benchmark_topology


class QuadraticToyGame(GameDefinition):
    """Two single-agent clusters with costs 0.5 (x_i - b_i)^2.

    The constraint is a constant vector, so the coupled system is either
    trivially slack (negative constant) or infeasible (positive constant).
    """

    def __init__(self, b=(1.0, -2.0), horizon=10, box=(-100.0, 100.0), constraint_value=-1.0):
        self.layout = ClusterLayout((1, 1))
        self.m = 1
        self.horizon = horizon
        self.b = tuple(float(v) for v in b)
        self.box = box
        self._cval = float(constraint_value)

    def cost(self, cluster, member, t, profile):
        x = np.asarray(profile, dtype=float)
        flat = self.layout.flat_index(cluster, member)
        return 0.5 * (x[flat] - self.b[flat]) ** 2

    def grad_own(self, cluster, member, t, profile):
        x = np.asarray(profile, dtype=float)
        flat = self.layout.flat_index(cluster, member)
        return float(x[flat] - self.b[flat])

    def constraint(self, cluster, member, t, x):
        return np.array([self._cval])

    def constraint_grad(self, cluster, member, t, x):
        return np.zeros(1)

    def feasible_interval(self, cluster):
        return self.box


class ScalarConstraintGame(GameDefinition):
    """Single agent whose constraint vector is just [x]; costs are zero."""

    def __init__(self, horizon=10):
        self.layout = ClusterLayout((1,))
        self.m = 1
        self.horizon = horizon

    def cost(self, cluster, member, t, profile):
        return 0.0

    def grad_own(self, cluster, member, t, profile):
        return 0.0

    def constraint(self, cluster, member, t, x):
        return np.array([float(x)])

    def constraint_grad(self, cluster, member, t, x):
        return np.ones(1)

    def feasible_interval(self, cluster):
        return (-100.0, 100.0)


@pytest.fixture(scope="session")
def network():
    return benchmark_topology()


def random_connected_graph(rng, node_count):
    """Random spanning tree plus a few extra edges."""
    edges = set()
    order = rng.permutation(node_count)
    for i in range(1, node_count):
        a = order[i]
        b = order[rng.integers(0, i)]
        edges.add((min(a, b), max(a, b)))
    extra = rng.integers(0, node_count)
    for _ in range(extra):
        a, b = rng.integers(0, node_count, size=2)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return edges
