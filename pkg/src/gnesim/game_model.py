"""Time-varying multi-cluster games: costs, coupled constraints, gradients, bounds.

A game assigns every agent ``(cluster, member)`` a per-round cost
``cost(cluster, member, t, profile)`` that is convex and differentiable in
the agent's own coordinate, and an m-dimensional constraint function of the
agent's own scalar decision.  The coupled feasibility requirement is that
the constraint vectors summed over *all* agents are componentwise
nonpositive.  Rounds are 1-based: t = 1, ..., horizon.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, GameDefinitionError, ValidationError
from .topology import ClusterLayout


def positive_part(v):
    """Componentwise max(0, .)."""
    return np.maximum(np.asarray(v, dtype=float), 0.0)


def clipped_constraint_grad(values, grads):
    """Gradient of the componentwise positive part of a constraint vector.

    Component k keeps grads[k] where values[k] >= 0 and is zero where the
    constraint component is strictly negative.
    """
    values = np.asarray(values, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if values.shape != grads.shape:
        raise ValidationError(
            f"constraint value/gradient length mismatch: {values.shape} vs {grads.shape}"
        )
    return np.where(values >= 0.0, grads, 0.0)


def project_interval(x: float, lo: float, hi: float) -> float:
    """Euclidean projection of a scalar onto [lo, hi]."""
    if lo > hi:
        raise ConfigurationError(f"empty interval [{lo}, {hi}]")
    return min(max(float(x), lo), hi)


class GameDefinition(ABC):
    """Interface every game instance must provide.

    Instances are pure (no mutable state) and may be called concurrently.
    """

    layout: ClusterLayout
    m: int
    horizon: int

    @abstractmethod
    def cost(self, cluster: int, member: int, t: int, profile) -> float:
        """Local cost of one agent at round t, evaluated on a full decision profile."""

    @abstractmethod
    def grad_own(self, cluster: int, member: int, t: int, profile) -> float:
        """Derivative of the agent's local cost with respect to its own coordinate."""

    @abstractmethod
    def constraint(self, cluster: int, member: int, t: int, x: float) -> np.ndarray:
        """m-vector of the agent's coupled-constraint contribution at decision x."""

    @abstractmethod
    def constraint_grad(self, cluster: int, member: int, t: int, x: float) -> np.ndarray:
        """Derivative of each constraint component with respect to x."""

    @abstractmethod
    def feasible_interval(self, cluster: int) -> tuple[float, float]:
        """Local feasible interval [lo, hi] shared by all members of a cluster."""

    def check_round(self, t: int):
        if not 1 <= t <= self.horizon:
            raise ValidationError(f"round {t} outside [1, {self.horizon}]")


def consensus_profile(layout: ClusterLayout, y) -> np.ndarray:
    """Expand per-cluster values y (length N) to a consensual length-n profile."""
    y = np.asarray(y, dtype=float)
    if y.shape != (layout.num_clusters,):
        raise ValidationError(f"expected {layout.num_clusters} cluster values, got {y.shape}")
    return np.repeat(y, layout.cluster_sizes)


def pseudo_gradient_reduced(game: GameDefinition, t: int, y) -> np.ndarray:
    """Cluster-level pseudo-gradient at a consensual profile.

    Component i sums, over the members of cluster i, the own-coordinate
    gradients of the members' local costs, all evaluated at the profile
    where every agent of cluster p plays y[p].
    """
    game.check_round(t)
    layout = game.layout
    profile = consensus_profile(layout, y)
    out = np.zeros(layout.num_clusters)
    for cluster, member in layout.agents():
        out[cluster] += game.grad_own(cluster, member, t, profile)
    return out


def aggregate_constraint(game: GameDefinition, t: int, y) -> np.ndarray:
    """Coupled constraint vector summed over all agents at a consensual profile."""
    y = np.asarray(y, dtype=float)
    total = np.zeros(game.m)
    for cluster, member in game.layout.agents():
        total += game.constraint(cluster, member, t, float(y[cluster]))
    return total


def aggregate_constraint_jacobian(game: GameDefinition, t: int, y) -> np.ndarray:
    """(m x N) Jacobian of the aggregate constraint with respect to the cluster values."""
    y = np.asarray(y, dtype=float)
    jac = np.zeros((game.m, game.layout.num_clusters))
    for cluster, member in game.layout.agents():
        jac[:, cluster] += game.constraint_grad(cluster, member, t, float(y[cluster]))
    return jac


@dataclass(frozen=True)
class GameBounds:
    """Uniform bounds used in runtime assertions.

    K bounds |cost| and the constraint-vector norm, G the own-gradient and
    constraint-gradient norms, R the decision magnitude over the feasible
    intervals.
    """

    K: float
    G: float
    R: float

    def __post_init__(self):
        if min(self.K, self.G, self.R) <= 0:
            raise ValidationError("bounds must be positive")


def estimate_bounds(game: GameDefinition, grid_points: int = 128) -> GameBounds:
    """Estimate K, G, R by maximization over a uniform grid.

    The profile box is sampled with a per-axis grid whose total size is close
    to ``grid_points`` and rounds are sampled uniformly.  K and G are grid
    maxima inflated by 10% (they are used only as safe over-estimates in
    assertion tolerances); R is exact from the interval endpoints.
    """
    if grid_points < 100:
        raise ConfigurationError("grid_points must be at least 100")
    layout = game.layout
    n = layout.n
    per_axis = max(2, int(round(grid_points ** (1.0 / n))))
    axes = []
    for cluster, _ in layout.agents():
        lo, hi = game.feasible_interval(cluster)
        axes.append(np.linspace(lo, hi, per_axis))
    times = np.unique(np.linspace(1, game.horizon, num=min(game.horizon, 64), dtype=int))

    max_cost = 0.0
    max_g_norm = 0.0
    max_grad = 0.0
    max_g_grad = 0.0
    for t in times:
        t = int(t)
        # Scalar quantities depend on the agent's own coordinate only.
        for cluster, member in layout.agents():
            for x in axes[layout.flat_index(cluster, member)]:
                g = game.constraint(cluster, member, t, float(x))
                gg = game.constraint_grad(cluster, member, t, float(x))
                max_g_norm = max(max_g_norm, float(np.linalg.norm(g)))
                max_g_grad = max(max_g_grad, float(np.linalg.norm(gg)))
        for values in itertools.product(*axes):
            profile = np.array(values)
            for cluster, member in layout.agents():
                c = game.cost(cluster, member, t, profile)
                d = game.grad_own(cluster, member, t, profile)
                if not (math.isfinite(c) and math.isfinite(d)):
                    raise GameDefinitionError(
                        f"non-finite cost/gradient at t={t}, agent ({cluster},{member})"
                    )
                max_cost = max(max_cost, abs(c))
                max_grad = max(max_grad, abs(d))
    if not (math.isfinite(max_g_norm) and math.isfinite(max_g_grad)):
        raise GameDefinitionError("non-finite constraint values on grid")
    r = max(
        max(abs(lo), abs(hi))
        for lo, hi in (game.feasible_interval(i) for i in range(layout.num_clusters))
    )
    return GameBounds(
        K=1.1 * max(max_cost, max_g_norm),
        G=1.1 * max(max_grad, max_g_grad),
        R=float(r),
    )


class BenchmarkGame(GameDefinition):
    """Built-in 3-cluster, 7-agent time-varying game.

    Every agent's own cost term is a quadratic ``a * h1(t) * (x - 5/t)^2``
    pulled toward the moving target 5/t with amplitude h1(t) = |sin(0.005 t)|;
    the cross terms couple clusters linearly or quadratically.  Each agent
    contributes six coupled constraint components
    ``0.5 * (x^2 - k * h2(t)) - 100 * exp(-(i + j + 1))`` for k = 1..6 with
    h2(t) = sin^2(0.001 t) and 0-based (i, j).  Local intervals are [-10, 10].
    """

    _OWN_COEF = (20.0, 20.0, 15.0, 20.0, 10.0, 20.0, 20.0)
    _COMPONENTS = np.arange(1, 7, dtype=float)

    def __init__(self, horizon: int):
        if horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        self.layout = ClusterLayout((3, 3, 1))
        self.m = 6
        self.horizon = int(horizon)

    @staticmethod
    def h1(t: int) -> float:
        return abs(math.sin(0.005 * t))

    @staticmethod
    def h2(t: int) -> float:
        return math.sin(1e-3 * t) ** 2

    def _cross(self, flat: int, x) -> float:
        if flat == 0:
            return x[6]
        if flat == 1:
            return -x[3] + x[4] ** 2
        if flat == 2:
            return x[4] * (x[4] - x[3])
        if flat == 3:
            return x[0]
        if flat == 4:
            return x[6] * (x[1] + x[2])
        if flat == 5:
            return 0.0
        return x[0] + x[5]

    def cost(self, cluster, member, t, profile):
        x = np.asarray(profile, dtype=float)
        flat = self.layout.flat_index(cluster, member)
        own = x[flat] - 5.0 / t
        return self._OWN_COEF[flat] * self.h1(t) * own * own + float(self._cross(flat, x))

    def grad_own(self, cluster, member, t, profile):
        x = np.asarray(profile, dtype=float)
        flat = self.layout.flat_index(cluster, member)
        return 2.0 * self._OWN_COEF[flat] * self.h1(t) * (x[flat] - 5.0 / t)

    def constraint(self, cluster, member, t, x):
        offset = 100.0 * math.exp(-(cluster + member + 1))
        return 0.5 * (x * x - self._COMPONENTS * self.h2(t)) - offset

    def constraint_grad(self, cluster, member, t, x):
        return np.full(self.m, float(x))

    def feasible_interval(self, cluster):
        return (-10.0, 10.0)

    # Closed-form cluster-level terms; must agree with the generic
    # agent-summed evaluation (covered by tests).
    _CLUSTER_COEF = np.array([110.0, 100.0, 40.0])
    _OFFSET_SUM = float(
        np.exp(-1) + 2 * np.exp(-2) + 3 * np.exp(-3) + np.exp(-4)
    )

    def reduced_operator_terms(self, t: int, y):
        y = np.asarray(y, dtype=float)
        sizes = np.asarray(self.layout.cluster_sizes, dtype=float)
        f = self._CLUSTER_COEF * self.h1(t) * (y - 5.0 / t)
        quad = 0.5 * float(np.dot(sizes, y * y))
        c = quad - 0.5 * self._COMPONENTS * self.h2(t) * self.layout.n - 100.0 * self._OFFSET_SUM
        jac = np.tile(sizes * y, (self.m, 1))
        return f, c, jac


def benchmark_game(horizon: int) -> BenchmarkGame:
    """The built-in benchmark instance over the given horizon."""
    return BenchmarkGame(horizon)


GAME_PRESETS = {"benchmark": benchmark_game}
