"""Performance measures computed from a trajectory and a comparator series.

Regret compares the played decisions against the per-round equilibrium
comparator; constraint violation accumulates the positive parts of the
summed coupled constraints round by round (a feasible round can never offset
an earlier infeasible one); path variation measures the comparator's own
movement.  Cumulative series use compensated summation so that horizons up
to 1e6 rounds lose no precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import StepSchedule, Trajectory
from .errors import ValidationError
from .game_model import GameBounds, GameDefinition, consensus_profile, positive_part


class _Kahan:
    """Compensated accumulator for a scalar or a fixed-shape vector."""

    def __init__(self, shape=()):
        self.total = np.zeros(shape)
        self._carry = np.zeros(shape)

    def add(self, value):
        y = np.asarray(value, dtype=float) - self._carry
        t = self.total + y
        self._carry = (t - self.total) - y
        self.total = t

    def value(self):
        return self.total.copy() if self.total.ndim else float(self.total)


def _check_lengths(trajectory: Trajectory, comparator: np.ndarray):
    comparator = np.asarray(comparator, dtype=float)
    if comparator.ndim != 2:
        raise ValidationError("comparator must be a (rounds, clusters) array")
    if comparator.shape[0] < trajectory.horizon:
        raise ValidationError(
            f"comparator covers {comparator.shape[0]} rounds, trajectory needs {trajectory.horizon}"
        )
    return comparator


def _agent_round_regret(game: GameDefinition, t: int, x_agent: float, cluster: int, base_profile, base_costs):
    """Cluster-summed regret term of one agent for one round.

    base_profile is the consensual comparator profile of round t and
    base_costs its per-member costs for the agent's cluster.
    """
    layout = game.layout
    profile = base_profile.copy()
    profile[layout.cluster_slice(cluster)] = x_agent
    total = 0.0
    for k in range(layout.cluster_sizes[cluster]):
        total += game.cost(cluster, k, t, profile) - base_costs[k]
    return total


def regret_all_agents(trajectory: Trajectory, comparator, game: GameDefinition) -> np.ndarray:
    """(T, n) cumulative per-agent regret series.

    The round-t term of agent (i, j) sums, over the members of cluster i,
    the member costs at the profile where the whole cluster plays the agent's
    decision and every other cluster sits at the comparator, minus the same
    costs at the all-comparator profile.
    """
    comparator = _check_lengths(trajectory, comparator)
    layout = game.layout
    out = np.empty((trajectory.horizon, layout.n))
    accumulators = [_Kahan() for _ in range(layout.n)]
    for t in range(1, trajectory.horizon + 1):
        base_profile = consensus_profile(layout, comparator[t - 1])
        base_costs = {
            i: [game.cost(i, k, t, base_profile) for k in range(layout.cluster_sizes[i])]
            for i in range(layout.num_clusters)
        }
        for a, (cluster, member) in enumerate(layout.agents()):
            term = _agent_round_regret(
                game, t, trajectory.decisions[t - 1, a], cluster, base_profile, base_costs[cluster]
            )
            accumulators[a].add(term)
            out[t - 1, a] = accumulators[a].value()
    return out


def regret_agent(trajectory: Trajectory, comparator, game: GameDefinition, cluster: int, member: int) -> np.ndarray:
    """Cumulative regret series of a single agent."""
    comparator = _check_lengths(trajectory, comparator)
    layout = game.layout
    a = layout.flat_index(cluster, member)
    acc = _Kahan()
    out = np.empty(trajectory.horizon)
    for t in range(1, trajectory.horizon + 1):
        base_profile = consensus_profile(layout, comparator[t - 1])
        base_costs = [game.cost(cluster, k, t, base_profile) for k in range(layout.cluster_sizes[cluster])]
        acc.add(
            _agent_round_regret(game, t, trajectory.decisions[t - 1, a], cluster, base_profile, base_costs)
        )
        out[t - 1] = acc.value()
    return out


def regret_system(trajectory: Trajectory, comparator, game: GameDefinition) -> np.ndarray:
    """Cumulative system regret series R(t).

    The round term sums, over every agent, that agent's own cost at its
    played decision (other clusters at the comparator) minus its cost at the
    all-comparator profile.
    """
    comparator = _check_lengths(trajectory, comparator)
    layout = game.layout
    acc = _Kahan()
    out = np.empty(trajectory.horizon)
    for t in range(1, trajectory.horizon + 1):
        base_profile = consensus_profile(layout, comparator[t - 1])
        term = 0.0
        for a, (cluster, member) in enumerate(layout.agents()):
            profile = base_profile.copy()
            profile[layout.cluster_slice(cluster)] = trajectory.decisions[t - 1, a]
            term += game.cost(cluster, member, t, profile) - game.cost(cluster, member, t, base_profile)
        acc.add(term)
        out[t - 1] = acc.value()
    return out


def constraint_violation(trajectory: Trajectory, game: GameDefinition) -> np.ndarray:
    """CV(t): norm of the running sum of per-round positive constraint parts.

    Positive parts are taken before summation, so feasible rounds cannot
    compensate earlier violations and the series is nondecreasing.
    """
    layout = game.layout
    acc = _Kahan(shape=(game.m,))
    out = np.empty(trajectory.horizon)
    for t in range(1, trajectory.horizon + 1):
        round_sum = np.zeros(game.m)
        for a, (cluster, member) in enumerate(layout.agents()):
            round_sum += positive_part(
                game.constraint(cluster, member, t, float(trajectory.decisions[t - 1, a]))
            )
        acc.add(round_sum)
        out[t - 1] = float(np.linalg.norm(acc.value()))
    return out


def path_variation(comparator) -> np.ndarray:
    """Cumulative comparator movement: entry t-1 sums cluster-wise absolute
    differences between rounds s and s+1 for s <= t.

    For a length-L comparator the series has L-1 entries.
    """
    comparator = np.asarray(comparator, dtype=float)
    if comparator.ndim != 2 or comparator.shape[0] < 2:
        raise ValidationError("comparator must hold at least two rounds")
    steps = np.sum(np.abs(np.diff(comparator, axis=0)), axis=1)
    acc = _Kahan()
    out = np.empty(steps.shape[0])
    for i, s in enumerate(steps):
        acc.add(s)
        out[i] = acc.value()
    return out


@dataclass
class DualBoundReport:
    """Outcome of the runtime dual/auxiliary norm bound check."""

    ok: bool
    min_slack: float
    worst_agent: int
    worst_round: int
    bound: np.ndarray  # (T,) per-round bound values


def dual_norm_bound_report(
    trajectory: Trajectory,
    schedule: StepSchedule,
    bounds: GameBounds,
    tolerance: float = 1e-9,
) -> DualBoundReport:
    """Check ||mu|| and ||z|| against sigma_t (t-1) K / delta_{t-1} every round.

    A violation signals an engine bug or an underestimated K.  Slack is
    bound + tolerance - norm; the report carries the worst case.
    """
    if trajectory.horizon > schedule.horizon:
        raise ValidationError("schedule shorter than trajectory")
    bound = np.array(
        [schedule.sigma(t) * (t - 1) * bounds.K / schedule.delta(t - 1) for t in range(1, trajectory.horizon + 1)]
    )
    worst = np.maximum(trajectory.mu_norm, trajectory.z_norm)
    slack = bound[:, None] + tolerance - worst
    idx = np.unravel_index(np.argmin(slack), slack.shape)
    return DualBoundReport(
        ok=bool(np.all(slack >= 0.0)),
        min_slack=float(slack[idx]),
        worst_agent=int(idx[1]),
        worst_round=int(idx[0]) + 1,
        bound=bound,
    )


@dataclass
class MetricSeries:
    """All per-round series needed for reports and CSV emission."""

    horizon: int
    regret: np.ndarray             # (T,) cumulative R(t)
    regret_per_agent: np.ndarray   # (T, n) cumulative per-agent regret
    violation: np.ndarray          # (T,) CV(t)
    path_variation: np.ndarray     # (T-1,) comparator movement
    consensus_error: np.ndarray
    estimation_error: np.ndarray
    max_mu_norm: np.ndarray        # (T,)
    sigma: np.ndarray              # (T,)
    dual_bound: np.ndarray | None  # (T,) when bounds were supplied


def compute_metrics(
    trajectory: Trajectory,
    comparator,
    game: GameDefinition,
    schedule: StepSchedule,
    bounds: GameBounds | None = None,
) -> MetricSeries:
    comparator = _check_lengths(trajectory, comparator)
    dual_bound = None
    if bounds is not None:
        dual_bound = dual_norm_bound_report(trajectory, schedule, bounds).bound
    return MetricSeries(
        horizon=trajectory.horizon,
        regret=regret_system(trajectory, comparator, game),
        regret_per_agent=regret_all_agents(trajectory, comparator, game),
        violation=constraint_violation(trajectory, game),
        path_variation=path_variation(comparator[: trajectory.horizon]),
        consensus_error=trajectory.consensus_error.copy(),
        estimation_error=trajectory.estimation_error.copy(),
        max_mu_norm=np.max(trajectory.mu_norm, axis=1),
        sigma=np.array([schedule.sigma(t) for t in range(1, trajectory.horizon + 1)]),
        dual_bound=dual_bound,
    )
