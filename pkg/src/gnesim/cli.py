"""Command-line entry point.

Subcommands: run, sweep-delays, sweep-types, verify.  A TOML config file
supplies the experiment; flags override individual keys.  Exit codes:
0 success, 2 configuration/validation problems, 3 diverged run, 4 oracle
non-convergence.
"""

from __future__ import annotations

import argparse
import sys

from .config import ExperimentConfig, load_config, with_overrides
from .errors import (
    ConfigurationError,
    DivergenceError,
    EquilibriumSolveError,
    GnesimError,
    ValidationError,
)
from .harness import run_experiment, sweep_constant_delays, sweep_delay_types, verify_assumptions

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_ORACLE = 4


def _add_common(parser):
    parser.add_argument("--config", help="TOML config file (defaults apply when omitted)")
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--label", type=str)
    parser.add_argument("--output-dir", dest="output_dir", type=str)
    parser.add_argument("--thinning", type=int)
    parser.add_argument("--init-decision", dest="init_decision", type=float)
    parser.add_argument("--init-estimate", dest="init_estimate", type=float)
    parser.add_argument("--oracle-tolerance", dest="oracle_tolerance", type=float)
    parser.add_argument("--delay-kind", dest="delay_kind", type=str)
    parser.add_argument("--delay-t0", dest="delay_t0", type=int)
    parser.add_argument("--delay-t1", dest="delay_t1", type=int)
    parser.add_argument("--delay-t2", dest="delay_t2", type=int)
    parser.add_argument("--steps-kind", dest="steps_kind", type=str)


def _build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    overrides = {
        key: value
        for key, value in vars(args).items()
        if value is not None
        and key
        in {
            "horizon", "label", "output_dir", "thinning", "init_decision",
            "init_estimate", "oracle_tolerance", "delay_kind", "delay_t0",
            "delay_t1", "delay_t2", "steps_kind",
        }
    }
    return with_overrides(cfg, **overrides) if overrides else cfg


def _cmd_run(args) -> int:
    report = run_experiment(_build_config(args))
    print(f"wrote {report.csv_path}")
    print(f"R(T)/T = {report.regret_over_t:.6g}   CV(T)/T = {report.violation_over_t:.6g}")
    print(f"dual bound ok: {report.dual_bound_ok}   wall time: {report.wall_time_s:.2f}s")
    return 0


def _cmd_sweep_delays(args) -> int:
    cfg = _build_config(args)
    t0_list = [int(v) for v in args.t0_list.split(",") if v.strip() != ""]
    reports = sweep_constant_delays(cfg, t0_list)
    print("t0,R_over_T,CV_over_T")
    for t0, report in zip(t0_list, reports):
        print(f"{t0},{report.regret_over_t:.6g},{report.violation_over_t:.6g}")
    return 0


def _cmd_sweep_types(args) -> int:
    cfg = _build_config(args)
    result = sweep_delay_types(cfg)
    print("kind,R_over_T,CV_over_T,delay_sum_exponent,delay_assumptions_ok")
    for kind in ("type1", "type2", "type3"):
        rep = result.reports[kind]
        ver = result.assumptions[kind]
        print(
            f"{kind},{rep.regret_over_t:.6g},{rep.violation_over_t:.6g},"
            f"{ver.delay_sum_exponent:.3f},{ver.delay_assumptions_ok}"
        )
    return 0


def _cmd_verify(args) -> int:
    report = verify_assumptions(_build_config(args))
    for key, value in vars(report).items():
        print(f"{key}: {value}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gnesim",
        description="Distributed online equilibrium learning in multi-cluster games "
        "with delayed feedback",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single experiment run")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sd = sub.add_parser("sweep-delays", help="compare constant feedback delays")
    _add_common(p_sd)
    p_sd.add_argument("--t0-list", dest="t0_list", default="0,10,20,40,60,80")
    p_sd.set_defaults(func=_cmd_sweep_delays)

    p_st = sub.add_parser("sweep-types", help="compare the time-varying delay schedules")
    _add_common(p_st)
    p_st.set_defaults(func=_cmd_sweep_types)

    p_v = sub.add_parser("verify", help="report-only assumption validation")
    _add_common(p_v)
    p_v.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except EquilibriumSolveError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except GnesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
