"""Synchronous round loop of the delay-tolerant online learning algorithm.

Per round, every agent: receives whatever delayed cost/constraint feedback
the calendar delivers, sums the gradients of all delivered rounds at its
*current* decision and estimates, mixes estimates over the global graph,
takes a projected consensus-gradient step inside its cluster, and updates
the auxiliary/dual pair that tracks the coupled-constraint multiplier.  All
reads within a round target round-t state; all writes target round t+1, so
agent updates commute and the loop is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delay_schedule import FeedbackCalendar
from .errors import ConfigurationError, DivergenceError, ValidationError
from .game_model import GameDefinition, clipped_constraint_grad, positive_part
from .topology import MixingMatrix, Network, build_metropolis


@dataclass(frozen=True)
class StepSchedule:
    """Step-size sequences alpha/beta/gamma over rounds 1..horizon.

    All three must be nonincreasing and in (0, 1], and the pair (beta, gamma)
    must satisfy beta_t * gamma_{t-1} <= beta_{t-1} * gamma_t <= 1; both are
    checked at construction.  sigma(t) = 4^(t - horizon) ramps the constraint
    pressure of the dual update toward the end of the horizon (it underflows
    to exactly 0 for t - horizon < -537, which is accepted).
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    horizon: int

    def __post_init__(self):
        horizon = int(self.horizon)
        for name in ("alpha", "beta", "gamma"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (horizon,):
                raise ConfigurationError(f"{name} must have one entry per round")
            if np.any(arr <= 0.0) or np.any(arr > 1.0):
                t = int(np.argmax((arr <= 0.0) | (arr > 1.0))) + 1
                raise ConfigurationError(f"{name} must lie in (0, 1]; violated at t={t}")
            if horizon > 1:
                diffs = arr[1:] - arr[:-1]
                if np.any(diffs > 0.0):
                    t = int(np.argmax(diffs > 0.0)) + 2
                    raise ConfigurationError(f"{name} must be nonincreasing; violated at t={t}")
        if horizon > 1:
            lhs = self.beta[1:] * self.gamma[:-1]
            rhs = self.beta[:-1] * self.gamma[1:]
            bad = lhs > rhs
            if np.any(bad):
                t = int(np.argmax(bad)) + 2
                raise ConfigurationError(
                    f"step-size cross-condition beta_t*gamma_(t-1) <= beta_(t-1)*gamma_t "
                    f"violated at t={t}"
                )
            if np.any(rhs > 1.0):
                t = int(np.argmax(rhs > 1.0)) + 2
                raise ConfigurationError(f"beta_(t-1)*gamma_t exceeds 1 at t={t}")

    def sigma(self, t: int) -> float:
        return 4.0 ** (t - self.horizon)

    def delta(self, t: int) -> float:
        """beta_t / gamma_t, with t <= 0 clamped to the first round."""
        i = max(int(t), 1) - 1
        return float(self.beta[i] / self.gamma[i])


STEP_KINDS = ("horizon_power", "benchmark")


def make_step_schedule(
    kind: str,
    horizon: int,
    a1: float = 0.75,
    a2: float = 0.25,
    a3: float = 1.5,
) -> StepSchedule:
    """Build a validated step schedule.

    "horizon_power" uses the constant sequences alpha = T^-a1, beta = T^-a2,
    gamma = T^-a3 (defaults 3/4, 1/4, 3/2).  "benchmark" uses the
    per-round alpha_t = t^-0.98 with beta = T^-0.02 and gamma = T^-1.5, the
    parameterization of the bundled benchmark experiment.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    t = np.arange(1, horizon + 1, dtype=float)
    if kind == "horizon_power":
        if min(a1, a2, a3) <= 0:
            raise ConfigurationError("power-schedule exponents must be positive")
        alpha = np.full(horizon, float(horizon) ** -a1)
        beta = np.full(horizon, float(horizon) ** -a2)
        gamma = np.full(horizon, float(horizon) ** -a3)
    elif kind == "benchmark":
        alpha = t ** -0.98
        beta = np.full(horizon, float(horizon) ** -0.02)
        gamma = np.full(horizon, float(horizon) ** -1.5)
    else:
        raise ConfigurationError(f"unknown step-schedule kind {kind!r}; expected {STEP_KINDS}")
    return StepSchedule(alpha=alpha, beta=beta, gamma=gamma, horizon=horizon)


@dataclass(frozen=True)
class MixingSet:
    """Mixing matrix for the global graph plus one per cluster graph."""

    global_mixing: MixingMatrix
    cluster_mixing: tuple


def metropolis_mixing(network: Network) -> MixingSet:
    return MixingSet(
        global_mixing=build_metropolis(network.graph),
        cluster_mixing=tuple(build_metropolis(g) for g in network.cluster_graphs),
    )


@dataclass
class InitialState:
    """Initial decisions (one per agent) and decision estimates (n x n)."""

    decisions: np.ndarray
    estimates: np.ndarray


def uniform_initial_state(layout, decision: float = 10.0, estimate: float = 10.0) -> InitialState:
    n = layout.n
    est = np.full((n, n), float(estimate))
    x = np.full(n, float(decision))
    np.fill_diagonal(est, x)
    return InitialState(decisions=x, estimates=est)


@dataclass
class Trajectory:
    """Round-indexed record of a run; row t-1 holds the state in force at round t."""

    horizon: int
    decisions: np.ndarray            # (T, n) played decisions x_t
    consensus_error: np.ndarray      # (T,) max within-cluster deviation from the cluster mean
    estimation_error: np.ndarray     # (T,) max |estimate - estimated agent's decision|
    mu_norm: np.ndarray              # (T, n) dual-variable norms
    z_norm: np.ndarray               # (T, n) auxiliary-variable norms
    aggregated_gradient: np.ndarray  # (T, n) per-agent summed feedback gradients


def step_estimates(estimates: np.ndarray, mixing: np.ndarray) -> np.ndarray:
    """One consensus averaging pass over all estimate vectors.

    The caller overwrites each agent's own entry with its new decision
    afterwards; here every entry is just the mixing-weighted average of the
    neighbors' corresponding entries.
    """
    return mixing @ estimates


def aggregated_gradient(
    game: GameDefinition,
    calendar: FeedbackCalendar,
    cluster: int,
    member: int,
    t: int,
    decision: float,
    estimate_row: np.ndarray,
    mu: np.ndarray,
) -> float:
    """Sum of delayed cost/constraint gradients delivered to one agent at round t.

    Each delivered round's functions are evaluated at the agent's *current*
    decision and estimates; an empty delivery set contributes zero.
    """
    flat = game.layout.flat_index(cluster, member)
    batch = calendar.at(flat, t)
    total = 0.0
    profile = np.asarray(estimate_row, dtype=float).copy()
    profile[flat] = decision
    for s in batch:
        if not 1 <= s <= t:
            raise ValidationError(f"corrupt calendar: round {s} delivered at round {t}")
        g_val = game.constraint(cluster, member, s, decision)
        g_grad = game.constraint_grad(cluster, member, s, decision)
        total += game.grad_own(cluster, member, s, profile)
        total += float(np.dot(mu, clipped_constraint_grad(g_val, g_grad)))
    return total


def aggregated_constraint_positive(
    game: GameDefinition,
    calendar: FeedbackCalendar,
    cluster: int,
    member: int,
    t: int,
    decision: float,
) -> np.ndarray:
    """Sum of positive parts of the delivered constraint vectors (zero if none)."""
    flat = game.layout.flat_index(cluster, member)
    total = np.zeros(game.m)
    for s in calendar.at(flat, t):
        total += positive_part(game.constraint(cluster, member, s, decision))
    return total


def step_primal(
    cluster_decisions: np.ndarray,
    cluster_mixing: np.ndarray,
    alpha_t: float,
    cluster_gradients: np.ndarray,
    lo: float,
    hi: float,
) -> np.ndarray:
    """Projected mixing of the gradient-adjusted iterates of one cluster."""
    adjusted = cluster_decisions - alpha_t * cluster_gradients
    return np.clip(cluster_mixing @ adjusted, lo, hi)


def step_dual(
    z: np.ndarray,
    mu: np.ndarray,
    mixing: np.ndarray,
    beta_t: float,
    gamma_t: float,
    sigma_t: float,
    constraint_positive: np.ndarray,
) -> tuple:
    """One auxiliary/dual update for all agents; every term reads round-t state.

    z_{t+1} = z_t - beta * (mu_t - W mu_t)
    mu_{t+1} = [mu_t + gamma * ((z_t - W z_t) - sigma * G_t)]_+
    """
    z_new = z - beta_t * (mu - mixing @ mu)
    z_tilde = z - mixing @ z
    mu_new = positive_part(mu + gamma_t * (z_tilde - sigma_t * constraint_positive))
    return z_new, mu_new


def _check_finite(t, **arrays):
    for name, arr in arrays.items():
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(t, f"non-finite {name} at round {t}")


def run(
    game: GameDefinition,
    network: Network,
    calendar: FeedbackCalendar,
    schedule: StepSchedule,
    init: InitialState | None = None,
    mixing: MixingSet | None = None,
) -> Trajectory:
    """Execute the full horizon and record the trajectory.

    Per round, in order: aggregate delivered feedback gradients, mix
    estimates, take the projected primal step, update the auxiliary variable,
    then the dual (auxiliary consensus and dual update both read round-t
    state).  Identical inputs yield bit-identical trajectories.
    """
    layout = game.layout
    if network.layout != layout:
        raise ConfigurationError("network layout does not match the game")
    if calendar.layout != layout or calendar.horizon < schedule.horizon:
        raise ConfigurationError("calendar does not cover the requested horizon")
    horizon = schedule.horizon
    if horizon > game.horizon:
        raise ConfigurationError("schedule horizon exceeds the game horizon")
    if mixing is None:
        mixing = metropolis_mixing(network)
    if init is None:
        init = uniform_initial_state(layout)

    w = mixing.global_mixing.entries
    w_clusters = [m.entries for m in mixing.cluster_mixing]
    intervals = [game.feasible_interval(i) for i in range(layout.num_clusters)]

    n, m = layout.n, game.m
    x = np.array(init.decisions, dtype=float).copy()
    if x.shape != (n,):
        raise ConfigurationError(f"initial decisions must have shape ({n},)")
    for cluster, member in layout.agents():
        lo, hi = intervals[cluster]
        value = x[layout.flat_index(cluster, member)]
        if not lo <= value <= hi:
            raise ConfigurationError(
                f"initial decision {value} of agent ({cluster},{member}) outside [{lo},{hi}]"
            )
    est = np.array(init.estimates, dtype=float).copy()
    if est.shape != (n, n):
        raise ConfigurationError(f"initial estimates must have shape ({n},{n})")
    np.fill_diagonal(est, x)
    z = np.zeros((n, m))
    mu = np.zeros((n, m))

    agents = list(layout.agents())
    flat_of = {pair: layout.flat_index(*pair) for pair in agents}

    decisions_hist = np.empty((horizon, n))
    consensus_err = np.empty(horizon)
    estimation_err = np.empty(horizon)
    mu_norm = np.empty((horizon, n))
    z_norm = np.empty((horizon, n))
    agg_hist = np.empty((horizon, n))

    for t in range(1, horizon + 1):
        alpha_t = schedule.alpha[t - 1]
        beta_t = schedule.beta[t - 1]
        gamma_t = schedule.gamma[t - 1]
        sigma_t = schedule.sigma(t)

        # Feedback aggregation at the current iterate.
        agg = np.zeros(n)
        gpos = np.zeros((n, m))
        for cluster, member in agents:
            a = flat_of[(cluster, member)]
            batch = calendar.at(a, t)
            if batch:
                profile = est[a].copy()
                profile[a] = x[a]
                grad = 0.0
                pos = np.zeros(m)
                for s in batch:
                    g_val = game.constraint(cluster, member, s, x[a])
                    g_grad = game.constraint_grad(cluster, member, s, x[a])
                    grad += game.grad_own(cluster, member, s, profile)
                    grad += float(np.dot(mu[a], clipped_constraint_grad(g_val, g_grad)))
                    pos += positive_part(g_val)
                agg[a] = grad
                gpos[a] = pos

        # Record round-t state.
        decisions_hist[t - 1] = x
        worst = 0.0
        for i in range(layout.num_clusters):
            block = x[layout.cluster_slice(i)]
            worst = max(worst, float(np.max(np.abs(block - block.mean()))))
        consensus_err[t - 1] = worst
        estimation_err[t - 1] = float(np.max(np.abs(est - x[None, :])))
        mu_norm[t - 1] = np.linalg.norm(mu, axis=1)
        z_norm[t - 1] = np.linalg.norm(z, axis=1)
        agg_hist[t - 1] = agg

        # Updates; everything on the right-hand side is round-t state.
        est_mixed = step_estimates(est, w)
        x_new = np.empty(n)
        for i in range(layout.num_clusters):
            sl = layout.cluster_slice(i)
            lo, hi = intervals[i]
            x_new[sl] = step_primal(x[sl], w_clusters[i], alpha_t, agg[sl], lo, hi)
        z_new, mu_new = step_dual(z, mu, w, beta_t, gamma_t, sigma_t, gpos)
        _check_finite(t, decisions=x_new, estimates=est_mixed, auxiliary=z_new, dual=mu_new)

        x = x_new
        est = est_mixed
        np.fill_diagonal(est, x)
        z = z_new
        mu = mu_new

    return Trajectory(
        horizon=horizon,
        decisions=decisions_hist,
        consensus_error=consensus_err,
        estimation_error=estimation_err,
        mu_norm=mu_norm,
        z_norm=z_norm,
        aggregated_gradient=agg_hist,
    )
