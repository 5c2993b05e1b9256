"""Config-driven experiment runner: single runs, delay sweeps, assumption checks.

Every run writes one CSV of per-round series plus a JSON summary report;
identical configs produce byte-identical CSVs.  Sweeps add comparison and
summary CSVs.  The assumption validator reports structural checks plus
empirical growth exponents of the miss counts, delay sums and comparator
path variation, measured over a geometric ladder of horizons.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import engine, metrics, oracle
from .config import (
    ExperimentConfig,
    build_delay,
    build_game,
    build_network,
    build_schedule,
)
from .delay_schedule import build_calendar, calendar_stats
from .errors import ConfigurationError, FeedbackStarvationError
from .game_model import estimate_bounds
from .topology import validate_doubly_stochastic

# An agent's summed feedback delays should grow about linearly with the
# horizon (constant and periodic-batch delays all measure ~1.0); growth
# beyond this exponent breaks the delay premise of the sublinearity
# guarantees.  The quadratically spaced batch schedule measures ~1.5.
DELAY_SUM_EXPONENT_LIMIT = 1.25
# Miss counts and comparator path variation must stay sublinear.
SUBLINEAR_LIMIT = 0.95
# Largest tolerated growth of the max batch size across the horizon ladder.
BATCH_GROWTH_LIMIT = 1.5


@dataclass
class RunReport:
    """Terminal metrics of one run; the metric fields equal the CSV's last row."""

    label: str
    horizon: int
    regret_over_t: float
    violation_over_t: float
    regret_per_agent_over_t: tuple
    max_batch: int
    miss_max: tuple
    delay_sum: tuple
    dual_bound_ok: bool
    dual_bound_min_slack: float
    wall_time_s: float
    csv_path: str


def _csv_rows(horizon: int, thinning: int):
    rows = list(range(thinning, horizon + 1, thinning))
    if not rows or rows[-1] != horizon:
        rows.append(horizon)
    return rows


def _format(value: float) -> str:
    return format(float(value), ".17g")


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_series_csv(path: str, series: metrics.MetricSeries, layout, thinning: int = 1):
    """Emit the per-round series; row count is ceil(horizon / thinning).

    Rows are every thinning-th round plus always the final round, so the last
    row matches the run report.  Floats carry 17 significant digits.
    """
    agent_cols = [f"R_{c + 1}_{m + 1}_over_t" for c, m in layout.agents()]
    header = (
        ["t", "R_over_t", "CV_over_t"]
        + agent_cols
        + ["consensus_error", "estimation_error", "max_mu_norm", "sigma_t"]
    )
    lines = [",".join(header)]
    for t in _csv_rows(series.horizon, thinning):
        i = t - 1
        row = [str(t), _format(series.regret[i] / t), _format(series.violation[i] / t)]
        row += [_format(series.regret_per_agent[i, a] / t) for a in range(layout.n)]
        row += [
            _format(series.consensus_error[i]),
            _format(series.estimation_error[i]),
            _format(series.max_mu_norm[i]),
            _format(series.sigma[i]),
        ]
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def comparator_for(game, horizon: int, tolerance: float):
    """Comparator cluster values over 1..horizon as a (horizon, N) array."""
    return oracle.comparator_matrix(oracle.vgne_series(game, horizon, tolerance=tolerance))


def run_experiment(
    cfg: ExperimentConfig,
    comparator=None,
    output_dir: str | None = None,
) -> RunReport:
    """Run one configured experiment end to end and write its CSV and report."""
    cfg.validate()
    started = time.perf_counter()
    network = build_network(cfg)
    game = build_game(cfg)
    if game.layout != network.layout:
        raise ConfigurationError("game and topology presets have incompatible layouts")
    schedule = build_schedule(cfg)
    calendar = build_calendar(build_delay(cfg), network.layout, cfg.horizon)
    if comparator is None:
        comparator = comparator_for(game, cfg.horizon, cfg.oracle_tolerance)
    bounds = estimate_bounds(game)
    init = engine.uniform_initial_state(
        network.layout, decision=cfg.init_decision, estimate=cfg.init_estimate
    )
    trajectory = engine.run(game, network, calendar, schedule, init=init)
    series = metrics.compute_metrics(trajectory, comparator, game, schedule, bounds=bounds)
    dual = metrics.dual_norm_bound_report(trajectory, schedule, bounds)
    stats = calendar_stats(calendar)

    out_dir = output_dir if output_dir is not None else cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{cfg.label}.csv")
    write_series_csv(csv_path, series, network.layout, thinning=cfg.thinning)

    last = cfg.horizon - 1
    report = RunReport(
        label=cfg.label,
        horizon=cfg.horizon,
        regret_over_t=float(series.regret[last] / cfg.horizon),
        violation_over_t=float(series.violation[last] / cfg.horizon),
        regret_per_agent_over_t=tuple(
            float(v / cfg.horizon) for v in series.regret_per_agent[last]
        ),
        max_batch=stats.max_batch,
        miss_max=stats.miss_max,
        delay_sum=stats.delay_sum,
        dual_bound_ok=dual.ok,
        dual_bound_min_slack=dual.min_slack,
        wall_time_s=time.perf_counter() - started,
        csv_path=csv_path,
    )
    _atomic_write(
        os.path.join(out_dir, f"{cfg.label}_report.json"),
        json.dumps(asdict(report), indent=2, sort_keys=True) + "\n",
    )
    return report


def sweep_constant_delays(cfg: ExperimentConfig, t0_list, comparator=None) -> list:
    """One run per constant delay value; emits per-run CSVs plus comparison files.

    Returns the reports in the order of t0_list.  The summary CSV holds the
    terminal regret and violation rates per delay.
    """
    t0_list = [int(v) for v in t0_list]
    if not t0_list:
        raise ConfigurationError("t0_list must be nonempty")
    cfg.validate()
    if comparator is None:
        game = build_game(cfg)
        comparator = comparator_for(game, cfg.horizon, cfg.oracle_tolerance)
    reports = []
    for t0 in t0_list:
        kind = "none" if t0 == 0 else "constant"
        run_cfg = replace(
            cfg, label=f"{cfg.label}_t0_{t0}", delay=replace(cfg.delay, kind=kind, t0=t0)
        )
        reports.append(run_experiment(run_cfg, comparator=comparator))
    os.makedirs(cfg.output_dir, exist_ok=True)
    lines = ["t0,R_over_T,CV_over_T"]
    for t0, report in zip(t0_list, reports):
        lines.append(f"{t0},{_format(report.regret_over_t)},{_format(report.violation_over_t)}")
    _atomic_write(
        os.path.join(cfg.output_dir, f"{cfg.label}_sweep_delays_summary.csv"),
        "\n".join(lines) + "\n",
    )
    return reports


@dataclass
class SweepTypesResult:
    reports: dict       # kind -> RunReport
    assumptions: dict   # kind -> AssumptionReport


def sweep_delay_types(cfg: ExperimentConfig, comparator=None) -> SweepTypesResult:
    """Runs for the three time-varying delay schedules plus assumption flags."""
    cfg.validate()
    if comparator is None:
        game = build_game(cfg)
        comparator = comparator_for(game, cfg.horizon, cfg.oracle_tolerance)
    reports = {}
    assumptions = {}
    for kind in ("type1", "type2", "type3"):
        run_cfg = replace(
            cfg, label=f"{cfg.label}_{kind}", delay=replace(cfg.delay, kind=kind)
        )
        reports[kind] = run_experiment(run_cfg, comparator=comparator)
        assumptions[kind] = verify_assumptions(run_cfg, comparator=comparator)
    lines = ["kind,R_over_T,CV_over_T,delay_sum_exponent,delay_assumptions_ok"]
    for kind in ("type1", "type2", "type3"):
        rep, ver = reports[kind], assumptions[kind]
        lines.append(
            f"{kind},{_format(rep.regret_over_t)},{_format(rep.violation_over_t)},"
            f"{_format(ver.delay_sum_exponent)},{int(ver.delay_assumptions_ok)}"
        )
    _atomic_write(
        os.path.join(cfg.output_dir, f"{cfg.label}_sweep_types_summary.csv"),
        "\n".join(lines) + "\n",
    )
    return SweepTypesResult(reports=reports, assumptions=assumptions)


@dataclass
class AssumptionReport:
    """Structural checks plus measured growth exponents for one config."""

    graph_connected: bool
    cluster_graphs_connected: bool
    mixing_doubly_stochastic: bool
    feedback_reaches_all: bool
    step_sizes_ok: bool
    step_size_error: str | None
    max_batch: int
    batch_growth_ratio: float
    batch_bound_constant: bool
    miss_exponent: float
    delay_sum_exponent: float
    path_variation_exponent: float
    miss_sublinear: bool
    path_variation_sublinear: bool
    delay_sum_near_linear: bool
    delay_assumptions_ok: bool
    all_ok: bool


def _fit_exponent(horizons, values) -> float:
    """Slope of log(value) against log(horizon); 0 when the values stay tiny."""
    values = np.asarray(values, dtype=float)
    if np.all(values <= 1.0):
        return 0.0
    clipped = np.maximum(values, 1.0)
    return float(np.polyfit(np.log(np.asarray(horizons, float)), np.log(clipped), 1)[0])


def _ladder(horizon: int):
    steps = [max(2, horizon // 8), max(3, horizon // 4), max(4, horizon // 2), horizon]
    return sorted(set(steps))


def verify_assumptions(cfg: ExperimentConfig, comparator=None) -> AssumptionReport:
    """Report-only validation of the standing assumptions behind the guarantees.

    Checks connectivity and double stochasticity of the communication
    structure, feedback reachability, the step-size monotonicity and
    cross-conditions over the whole horizon, and measures growth exponents of
    per-agent miss counts, per-agent delay sums, and the comparator path
    variation over a geometric horizon ladder.
    """
    cfg.validate()
    network = build_network(cfg)
    mixing = engine.metropolis_mixing(network)
    graph_ok = network.graph.is_connected()
    clusters_ok = all(g.is_connected() for g in network.cluster_graphs)
    mixing_ok = validate_doubly_stochastic(mixing.global_mixing.entries) and all(
        validate_doubly_stochastic(m.entries) for m in mixing.cluster_mixing
    )

    step_error = None
    try:
        build_schedule(cfg)
    except ConfigurationError as exc:
        step_error = str(exc)

    schedule = build_delay(cfg)
    feedback_ok = True
    valid_horizons = []
    batch_by_horizon = []
    miss_by_horizon = []
    delay_by_horizon = []
    for h in _ladder(cfg.horizon):
        try:
            stats = calendar_stats(build_calendar(schedule, network.layout, h))
        except FeedbackStarvationError:
            if h == cfg.horizon:
                feedback_ok = False
            continue
        valid_horizons.append(h)
        batch_by_horizon.append(stats.max_batch)
        miss_by_horizon.append(max(stats.miss_max))
        delay_by_horizon.append(max(stats.delay_sum))

    game = build_game(cfg)
    if comparator is None:
        comparator = comparator_for(game, cfg.horizon, cfg.oracle_tolerance)
    phi = metrics.path_variation(comparator)
    phi_horizons = _ladder(cfg.horizon)
    phi_by_horizon = [float(phi[min(h, len(phi)) - 1]) for h in phi_horizons]

    if len(valid_horizons) >= 2:
        miss_exp = _fit_exponent(valid_horizons, miss_by_horizon)
        delay_exp = _fit_exponent(valid_horizons, delay_by_horizon)
        batch_ratio = (
            batch_by_horizon[-1] / batch_by_horizon[0] if batch_by_horizon[0] > 0 else float("inf")
        )
    else:
        # Too few deliverable horizons to measure growth; treat as violating.
        miss_exp = delay_exp = float("inf")
        batch_ratio = float("inf")
    phi_exp = _fit_exponent(phi_horizons, phi_by_horizon)
    miss_ok = miss_exp < SUBLINEAR_LIMIT
    phi_ok = phi_exp < SUBLINEAR_LIMIT
    delay_ok = delay_exp < DELAY_SUM_EXPONENT_LIMIT
    batch_ok = batch_ratio <= BATCH_GROWTH_LIMIT
    delay_flags = feedback_ok and miss_ok and delay_ok and batch_ok
    return AssumptionReport(
        graph_connected=graph_ok,
        cluster_graphs_connected=clusters_ok,
        mixing_doubly_stochastic=mixing_ok,
        feedback_reaches_all=feedback_ok,
        step_sizes_ok=step_error is None,
        step_size_error=step_error,
        max_batch=batch_by_horizon[-1] if batch_by_horizon else 0,
        batch_growth_ratio=float(batch_ratio),
        batch_bound_constant=batch_ok,
        miss_exponent=miss_exp,
        delay_sum_exponent=delay_exp,
        path_variation_exponent=phi_exp,
        miss_sublinear=miss_ok,
        path_variation_sublinear=phi_ok,
        delay_sum_near_linear=delay_ok,
        delay_assumptions_ok=delay_flags,
        all_ok=bool(
            graph_ok and clusters_ok and mixing_ok and step_error is None and delay_flags and phi_ok
        ),
    )
