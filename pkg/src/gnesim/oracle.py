"""Per-round equilibrium comparator for the reduced consensual game.

Within each cluster the comparator decisions are consensual, so the
equilibrium problem reduces to N cluster values inside their intervals with
the agent-summed coupled constraint.  The solver runs a projected
extragradient iteration on the cluster values and the shared constraint
multiplier; termination is by a residual combining stationarity, primal
feasibility of the summed constraints, and complementary slackness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EquilibriumSolveError, InfeasibleConstraintsError
from .game_model import (
    GameDefinition,
    aggregate_constraint,
    aggregate_constraint_jacobian,
    positive_part,
    pseudo_gradient_reduced,
)


@dataclass
class VgneSolution:
    """Converged per-round equilibrium: cluster values, multiplier, diagnostics."""

    y: np.ndarray
    mu: np.ndarray
    residual: float
    iterations: int
    residual_history: np.ndarray | None = None


class _ReducedProblem:
    """Cluster-level operator pieces for one round, with an optional fast path.

    A game may provide ``reduced_operator_terms(t, y) -> (F, c, J)``; it must
    agree with the generic agent-summed evaluation (tested), which remains
    the reference route.
    """

    def __init__(self, game: GameDefinition, t: int):
        game.check_round(t)
        self.game = game
        self.t = t
        self.lo = np.array([game.feasible_interval(i)[0] for i in range(game.layout.num_clusters)])
        self.hi = np.array([game.feasible_interval(i)[1] for i in range(game.layout.num_clusters)])
        self._fast = getattr(game, "reduced_operator_terms", None)

    def terms(self, y):
        if self._fast is not None:
            return self._fast(self.t, y)
        return (
            pseudo_gradient_reduced(self.game, self.t, y),
            aggregate_constraint(self.game, self.t, y),
            aggregate_constraint_jacobian(self.game, self.t, y),
        )

    def project_y(self, y):
        return np.clip(y, self.lo, self.hi)


def kkt_residual(game: GameDefinition, t: int, y, mu) -> float:
    """Stationarity + feasibility + complementarity residual at (y, mu).

    Returns the max of the projected stationarity norm
    ||y - P_box(y - (F(y) + J^T mu))||, the infeasibility norm ||[c(y)]_+||,
    and the complementarity gap |mu . c(y)|.
    """
    problem = _ReducedProblem(game, t)
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    f, c, jac = problem.terms(y)
    return _residual_from_terms(problem, y, mu, f, c, jac)


def _residual_from_terms(problem, y, mu, f, c, jac):
    stationarity = np.linalg.norm(y - problem.project_y(y - (f + jac.T @ mu)))
    infeasibility = np.linalg.norm(positive_part(c))
    complementarity = abs(float(np.dot(mu, c)))
    return float(max(stationarity, infeasibility, complementarity))


def _lipschitz_estimate(problem, y0, mu0):
    """Local finite-difference Lipschitz estimate of the stacked operator."""
    span = np.maximum(problem.hi - problem.lo, 1.0)
    probes = [(y0, mu0)]
    scale = 0.01
    for k in range(len(y0)):
        step = np.zeros_like(y0)
        step[k] = scale * span[k]
        probes.append((problem.project_y(y0 + step), mu0))
        probes.append((problem.project_y(y0 - step), mu0))
    probes.append((problem.project_y(y0), mu0 + 1.0))
    stacked = []
    for y, mu in probes:
        f, c, jac = problem.terms(y)
        stacked.append((np.concatenate([y, mu]), np.concatenate([f + jac.T @ mu, -c])))
    best = 1e-12
    for (ua, pa), (ub, pb) in itertools.combinations(stacked, 2):
        du = np.linalg.norm(ua - ub)
        if du > 0:
            best = max(best, np.linalg.norm(pa - pb) / du)
    return best


def solve_vgne(
    game: GameDefinition,
    t: int,
    tolerance: float = 1e-9,
    max_iterations: int = 400_000,
    warm_start: VgneSolution | None = None,
    track_history: bool = False,
) -> VgneSolution:
    """Solve the round-t reduced equilibrium by projected extragradient.

    The iteration runs on the stacked variable (cluster values, multiplier)
    with the multiplier projected onto the nonnegative orthant; the step
    length is 0.5 over a local Lipschitz estimate of the stacked operator,
    halved whenever progress stalls.
    """
    if tolerance <= 0:
        raise ConfigurationError("tolerance must be positive")
    problem = _ReducedProblem(game, t)
    n_clusters = game.layout.num_clusters
    if warm_start is not None:
        y = problem.project_y(np.asarray(warm_start.y, dtype=float).copy())
        mu = positive_part(np.asarray(warm_start.mu, dtype=float).copy())
    else:
        y = 0.5 * (problem.lo + problem.hi)
        mu = np.zeros(game.m)

    eta = 0.5 / _lipschitz_estimate(problem, y, mu)
    eta_cap = 1e6 * eta
    history = [] if track_history else None
    f, c, jac = problem.terms(y)
    initial_infeasibility = np.linalg.norm(positive_part(c))
    mu_start_norm = np.linalg.norm(mu)

    lo, hi = problem.lo, problem.hi
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        op_y = f + jac.T @ mu
        stationarity = float(np.linalg.norm(y - np.clip(y - op_y, lo, hi)))
        infeasibility = float(np.linalg.norm(np.maximum(c, 0.0)))
        complementarity = abs(float(np.dot(mu, c)))
        residual = max(stationarity, infeasibility, complementarity)
        if history is not None:
            history.append(residual)
        if residual <= tolerance:
            return VgneSolution(
                y=y,
                mu=mu,
                residual=residual,
                iterations=iteration - 1,
                residual_history=np.array(history) if history is not None else None,
            )
        if not np.isfinite(residual) or float(np.linalg.norm(mu)) > 1e12:
            break  # hopeless trajectory; fall through to failure classification

        # Backtracked extragradient: shrink eta until the operator change over
        # the trial step is small relative to the step itself, which keeps the
        # iteration contractive for monotone locally-Lipschitz operators.
        while True:
            y_half = np.clip(y - eta * op_y, lo, hi)
            mu_half = np.maximum(mu + eta * c, 0.0)
            f_h, c_h, jac_h = problem.terms(y_half)
            op_y_h = f_h + jac_h.T @ mu_half
            dy = y_half - y
            dmu = mu_half - mu
            step_sq = float(dy @ dy + dmu @ dmu)
            cy = op_y_h - op_y
            cmu = c - c_h
            change_sq = float(cy @ cy + cmu @ cmu)
            if eta * eta * change_sq <= 0.81 * step_sq or step_sq == 0.0:
                break
            if eta < 1e-280:
                raise EquilibriumSolveError(
                    f"round {t}: step length collapsed (residual {residual:.3g})",
                    residual=residual,
                )
            eta *= 0.5
        y = np.clip(y - eta * op_y_h, lo, hi)
        mu = np.maximum(mu + eta * c_h, 0.0)
        eta = min(eta * 1.05, eta_cap)  # regrow cautiously between backtracks
        f, c, jac = problem.terms(y)

    final_infeasibility = np.linalg.norm(positive_part(c))
    residual = _residual_from_terms(problem, y, mu, f, c, jac)
    if (
        np.isfinite(final_infeasibility)
        and final_infeasibility > 0.5 * initial_infeasibility
        and initial_infeasibility > 0
        and np.linalg.norm(mu) > 100.0 * (1.0 + mu_start_norm)
    ):
        raise InfeasibleConstraintsError(
            f"round {t}: summed constraints appear infeasible "
            f"(violation stuck at {final_infeasibility:.3g} while the multiplier grows); "
            "a strictly feasible point is required",
            residual=residual,
        )
    raise EquilibriumSolveError(
        f"round {t}: no convergence after {iteration} iterations "
        f"(residual {residual:.3g}, tolerance {tolerance:.3g})",
        residual=residual,
    )


def vgne_series(
    game: GameDefinition,
    horizon: int,
    tolerance: float = 1e-9,
    max_iterations: int = 400_000,
) -> list:
    """Warm-started comparator series over rounds 1..horizon."""
    if not 1 <= horizon <= game.horizon:
        raise ConfigurationError(f"horizon must lie in [1, {game.horizon}]")
    out = []
    previous = None
    for t in range(1, horizon + 1):
        try:
            solution = solve_vgne(
                game, t, tolerance=tolerance, max_iterations=max_iterations, warm_start=previous
            )
        except EquilibriumSolveError as exc:
            raise EquilibriumSolveError(
                f"comparator series failed at round {t}: {exc}", residual=exc.residual
            ) from exc
        out.append(solution)
        previous = solution
    return out


def comparator_matrix(series) -> np.ndarray:
    """Stack a solution series into a (rounds, clusters) array of cluster values."""
    return np.array([solution.y for solution in series])
