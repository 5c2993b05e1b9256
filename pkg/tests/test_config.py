import pytest

from gnesim.config import (
    ExperimentConfig,
    build_delay,
    build_game,
    build_network,
    build_schedule,
    config_to_toml,
    parse_config,
    with_overrides,
)
from gnesim.errors import ConfigurationError

FULL_DOC = """
[run]
horizon = 120
output_dir = "results"
thinning = 4
init_decision = 2.5
init_estimate = -1.0
oracle_tolerance = 1e-8
label = "custom"

[topology]
cluster_sizes = [2, 2]
edges = [[0, 1], [2, 3], [1, 2]]

[game]
preset = "benchmark"

[delay]
kind = "type1"
t1 = 15

[steps]
kind = "horizon_power"
a1 = 0.5
a2 = 0.125
a3 = 1.25
"""


def test_empty_document_yields_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.horizon == 5000
    assert cfg.delay.kind == "none"
    assert cfg.steps.kind == "benchmark"


def test_full_document_round_trips_canonically():
    cfg = parse_config(FULL_DOC)
    assert cfg.horizon == 120
    assert cfg.topology.preset is None
    assert cfg.topology.cluster_sizes == (2, 2)
    assert cfg.delay.kind == "type1" and cfg.delay.t1 == 15
    text = config_to_toml(cfg)
    assert parse_config(text) == cfg
    # Canonical form is a fixed point.
    assert config_to_toml(parse_config(text)) == text


def test_defaults_round_trip():
    cfg = ExperimentConfig().validate()
    assert parse_config(config_to_toml(cfg)) == cfg


def test_unknown_sections_and_bad_types_rejected():
    with pytest.raises(ConfigurationError):
        parse_config("[runn]\nhorizon = 3\n")
    with pytest.raises(ConfigurationError):
        parse_config('[run]\nhorizon = "many"\n')
    with pytest.raises(ConfigurationError):
        parse_config("[delay]\nkind = 'sometimes'\n")
    with pytest.raises(ConfigurationError):
        parse_config("[run\n")


def test_validation_errors():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(horizon=0).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(thinning=0).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(game="chess").validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(oracle_tolerance=0.0).validate()


def test_builders_produce_consistent_objects():
    cfg = parse_config(FULL_DOC)
    network = build_network(cfg)
    assert network.layout.cluster_sizes == (2, 2)
    game = build_game(cfg)
    assert game.horizon == cfg.horizon
    schedule = build_schedule(cfg)
    assert schedule.horizon == cfg.horizon
    assert build_delay(cfg).t1 == 15


def test_with_overrides_touches_nested_sections():
    cfg = ExperimentConfig().validate()
    updated = with_overrides(cfg, horizon=42, delay_kind="constant", delay_t0=7, steps_kind="horizon_power")
    assert updated.horizon == 42
    assert updated.delay.kind == "constant" and updated.delay.t0 == 7
    assert updated.steps.kind == "horizon_power"
    # Originals untouched.
    assert cfg.horizon == 5000 and cfg.delay.kind == "none"
    with pytest.raises(ConfigurationError):
        with_overrides(cfg, delay_kind="monthly")
