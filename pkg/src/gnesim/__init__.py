"""Distributed online generalized Nash equilibrium learning in multi-cluster
games under time-varying delayed feedback: simulator, per-round equilibrium
oracle, and regret/constraint-violation metrics."""

from .config import ExperimentConfig, load_config, parse_config
from .delay_schedule import (
    build_calendar,
    calendar_stats,
    constant_delay_schedule,
    type1_schedule,
    type2_schedule,
    type3_schedule,
)
from .engine import make_step_schedule, metropolis_mixing, run, uniform_initial_state
from .game_model import GameDefinition, benchmark_game, estimate_bounds
from .harness import run_experiment, sweep_constant_delays, sweep_delay_types, verify_assumptions
from .metrics import compute_metrics, constraint_violation, path_variation, regret_system
from .oracle import kkt_residual, solve_vgne, vgne_series
from .topology import benchmark_topology, build_metropolis, network_from_edges

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "GameDefinition",
    "benchmark_game",
    "benchmark_topology",
    "build_calendar",
    "build_metropolis",
    "calendar_stats",
    "compute_metrics",
    "constant_delay_schedule",
    "constraint_violation",
    "estimate_bounds",
    "kkt_residual",
    "load_config",
    "make_step_schedule",
    "metropolis_mixing",
    "network_from_edges",
    "parse_config",
    "path_variation",
    "regret_system",
    "run",
    "run_experiment",
    "solve_vgne",
    "sweep_constant_delays",
    "sweep_delay_types",
    "type1_schedule",
    "type2_schedule",
    "type3_schedule",
    "uniform_initial_state",
    "verify_assumptions",
    "vgne_series",
]
