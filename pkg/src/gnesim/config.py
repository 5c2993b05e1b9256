"""Experiment configuration: TOML parsing, validation, canonical serialization.

The config file has four sections; every key has a default, so the empty
document is a valid config (the bundled benchmark run):

    [run]
    horizon = 5000
    output_dir = "out"
    thinning = 1
    init_decision = 10.0
    init_estimate = 10.0
    oracle_tolerance = 1e-9
    label = "run"

    [topology]
    preset = "benchmark"        # or: cluster_sizes = [3,3,1], edges = [[0,1],...]

    [game]
    preset = "benchmark"

    [delay]
    kind = "none"               # none | constant | type1 | type2 | type3
    t0 = 0
    t1 = 30
    t2 = 30

    [steps]
    kind = "benchmark"          # benchmark | horizon_power
    a1 = 0.75
    a2 = 0.25
    a3 = 1.5

Agent indices in explicit edge lists are 0-based and flat (cluster by
cluster).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .delay_schedule import DELAY_KINDS, DelaySchedule, schedule_from_spec
from .engine import STEP_KINDS, StepSchedule, make_step_schedule
from .errors import ConfigurationError
from .game_model import GAME_PRESETS, GameDefinition
from .topology import Network, benchmark_topology, network_from_edges

TOPOLOGY_PRESETS = {"benchmark": benchmark_topology}


@dataclass(frozen=True)
class TopologySpec:
    preset: str | None = "benchmark"
    cluster_sizes: tuple = ()
    edges: tuple = ()

    def validate(self):
        if self.preset is not None:
            if self.preset not in TOPOLOGY_PRESETS:
                raise ConfigurationError(
                    f"unknown topology preset {self.preset!r}; known: {sorted(TOPOLOGY_PRESETS)}"
                )
        elif not self.cluster_sizes:
            raise ConfigurationError("explicit topology needs cluster_sizes and edges")


@dataclass(frozen=True)
class DelaySpec:
    kind: str = "none"
    t0: int = 0
    t1: int = 30
    t2: int = 30

    def validate(self):
        if self.kind not in DELAY_KINDS:
            raise ConfigurationError(f"delay.kind must be one of {DELAY_KINDS}, got {self.kind!r}")
        if self.t0 < 0 or self.t1 < 1 or self.t2 < 1:
            raise ConfigurationError("delay parameters out of range (t0 >= 0, t1 >= 1, t2 >= 1)")


@dataclass(frozen=True)
class StepSpec:
    kind: str = "benchmark"
    a1: float = 0.75
    a2: float = 0.25
    a3: float = 1.5

    def validate(self):
        if self.kind not in STEP_KINDS:
            raise ConfigurationError(f"steps.kind must be one of {STEP_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    horizon: int = 5000
    output_dir: str = "out"
    thinning: int = 1
    init_decision: float = 10.0
    init_estimate: float = 10.0
    oracle_tolerance: float = 1e-9
    label: str = "run"
    topology: TopologySpec = field(default_factory=TopologySpec)
    game: str = "benchmark"
    delay: DelaySpec = field(default_factory=DelaySpec)
    steps: StepSpec = field(default_factory=StepSpec)

    def validate(self):
        if self.horizon < 1:
            raise ConfigurationError("run.horizon must be >= 1")
        if self.thinning < 1:
            raise ConfigurationError("run.thinning must be >= 1")
        if self.oracle_tolerance <= 0:
            raise ConfigurationError("run.oracle_tolerance must be positive")
        if not self.label:
            raise ConfigurationError("run.label must be nonempty")
        if self.game not in GAME_PRESETS:
            raise ConfigurationError(
                f"unknown game preset {self.game!r}; known: {sorted(GAME_PRESETS)}"
            )
        self.topology.validate()
        self.delay.validate()
        self.steps.validate()
        return self


def _section(data, name):
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigurationError(f"section [{name}] must be a table")
    return value


def _take(section, key, kind, default):
    if key not in section:
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigurationError(f"key {key!r} must be {kind.__name__}")
    return value


def parse_config(text: str) -> ExperimentConfig:
    """Parse a TOML config document and validate it."""
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    known = {"run", "topology", "game", "delay", "steps"}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")

    run = _section(data, "run")
    topo = _section(data, "topology")
    game = _section(data, "game")
    delay = _section(data, "delay")
    steps = _section(data, "steps")

    preset = topo.get("preset")
    if preset is None and "cluster_sizes" not in topo:
        preset = "benchmark"
    topology = TopologySpec(
        preset=preset,
        cluster_sizes=tuple(topo.get("cluster_sizes", ())),
        edges=tuple(tuple(e) for e in topo.get("edges", ())),
    )
    cfg = ExperimentConfig(
        horizon=_take(run, "horizon", int, 5000),
        output_dir=_take(run, "output_dir", str, "out"),
        thinning=_take(run, "thinning", int, 1),
        init_decision=_take(run, "init_decision", float, 10.0),
        init_estimate=_take(run, "init_estimate", float, 10.0),
        oracle_tolerance=_take(run, "oracle_tolerance", float, 1e-9),
        label=_take(run, "label", str, "run"),
        topology=topology,
        game=_take(game, "preset", str, "benchmark"),
        delay=DelaySpec(
            kind=_take(delay, "kind", str, "none"),
            t0=_take(delay, "t0", int, 0),
            t1=_take(delay, "t1", int, 30),
            t2=_take(delay, "t2", int, 30),
        ),
        steps=StepSpec(
            kind=_take(steps, "kind", str, "benchmark"),
            a1=_take(steps, "a1", float, 0.75),
            a2=_take(steps, "a2", float, 0.25),
            a3=_take(steps, "a3", float, 1.5),
        ),
    )
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(value):
    if isinstance(value, bool):
        raise ConfigurationError("boolean config values are not used")
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise ConfigurationError(f"cannot serialize {type(value).__name__}")


def config_to_toml(cfg: ExperimentConfig) -> str:
    """Canonical serialization; parse(config_to_toml(c)) == c."""
    lines = ["[run]"]
    for key in ("horizon", "output_dir", "thinning", "init_decision", "init_estimate",
                "oracle_tolerance", "label"):
        lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    lines.append("")
    lines.append("[topology]")
    if cfg.topology.preset is not None:
        lines.append(f"preset = {_fmt(cfg.topology.preset)}")
    else:
        lines.append(f"cluster_sizes = {_fmt(cfg.topology.cluster_sizes)}")
        lines.append(f"edges = {_fmt(cfg.topology.edges)}")
    lines.append("")
    lines.append("[game]")
    lines.append(f"preset = {_fmt(cfg.game)}")
    lines.append("")
    lines.append("[delay]")
    for key in ("kind", "t0", "t1", "t2"):
        lines.append(f"{key} = {_fmt(getattr(cfg.delay, key))}")
    lines.append("")
    lines.append("[steps]")
    for key in ("kind", "a1", "a2", "a3"):
        lines.append(f"{key} = {_fmt(getattr(cfg.steps, key))}")
    lines.append("")
    return "\n".join(lines)


def build_network(cfg: ExperimentConfig) -> Network:
    if cfg.topology.preset is not None:
        return TOPOLOGY_PRESETS[cfg.topology.preset]()
    return network_from_edges(cfg.topology.cluster_sizes, cfg.topology.edges)


def build_game(cfg: ExperimentConfig, horizon: int | None = None) -> GameDefinition:
    return GAME_PRESETS[cfg.game](horizon if horizon is not None else cfg.horizon)


def build_delay(cfg: ExperimentConfig) -> DelaySchedule:
    return schedule_from_spec(cfg.delay.kind, t0=cfg.delay.t0, t1=cfg.delay.t1, t2=cfg.delay.t2)


def build_schedule(cfg: ExperimentConfig, horizon: int | None = None) -> StepSchedule:
    return make_step_schedule(
        cfg.steps.kind,
        horizon if horizon is not None else cfg.horizon,
        a1=cfg.steps.a1,
        a2=cfg.steps.a2,
        a3=cfg.steps.a3,
    )


def with_overrides(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    """Functional update helper used by the CLI flag overrides."""
    nested = {}
    for name in ("delay", "steps", "topology"):
        sub = {k[len(name) + 1:]: v for k, v in kwargs.items() if k.startswith(name + "_")}
        if sub:
            nested[name] = replace(getattr(cfg, name), **sub)
        for k in list(kwargs):
            if k.startswith(name + "_"):
                kwargs.pop(k)
    cfg = replace(cfg, **kwargs, **nested)
    return cfg.validate()
