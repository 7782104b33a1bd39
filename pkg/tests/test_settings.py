"""
Tests for run configuration, presets and overrides
"""

import json

import pytest

from config.settings import (
    RunConfig, list_presets, load_preset, parse_function, parse_grid, parse_value, split_values,
)
from core.errors import ConfigError
from core.fokker_planck import Equation
from core.model import FunctionKind


def test_presets_available():
    assert {'test1', 'test1-fp', 'test2', 'test2-fp'} <= set(list_presets())


def test_preset_model():
    mp = load_preset("test2").to_model_params()
    assert mp.trade.psi.kind is FunctionKind.POWER_LAW
    assert mp.trade.phi.evaluate(1.0) == pytest.approx(0.25)
    assert mp.knowledge.background_mean == pytest.approx(1.0)
    assert mp.trade.sigma == pytest.approx(0.1)


def test_fp_regime_preset():
    cfg = load_preset("test1-fp").to_sim_config()
    assert cfg.epsilon == pytest.approx(0.1)
    assert cfg.interaction_probability == pytest.approx(1.0)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        load_preset("test9")


def test_json_round_trip(tmp_path):
    config = load_preset("test1").with_overrides({'seed': 42, 'model.gamma': 0.2})
    path = tmp_path / "config.json"
    config.save(path)
    loaded = RunConfig.load(path)
    assert loaded.to_dict() == config.to_dict()
    assert json.loads(path.read_text())['seed'] == 42


def test_toml_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('seed = 3\n[model]\ngamma = 0.2\n[fokker_planck]\nequation = "fp2"\n')
    config = RunConfig.load(path)
    assert config.seed == 3
    assert isinstance(config.model.gamma, float)
    assert config.equation() is Equation.FP2


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('[model]\ngama = 0.2\n')
    with pytest.raises(ConfigError, match="gama"):
        RunConfig.load(path)


def test_unsupported_format(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 1\n")
    with pytest.raises(ConfigError):
        RunConfig.load(path)


def test_nested_override():
    config = load_preset("test2").with_overrides({'model.psi.exponent': 3.0})
    assert config.to_model_params().trade.psi.exponent == 3.0


def test_override_through_scalar():
    with pytest.raises(ConfigError):
        RunConfig().with_overrides({'seed.value': 1})


def test_risk_and_sigma_exclusive():
    assert RunConfig().to_model_params().trade.sigma == pytest.approx(0.1)
    config = RunConfig().with_overrides({'model.risk': 0.2})
    assert config.to_model_params().trade.risk == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        config.with_overrides({'model.sigma': 0.04}).to_model_params()


def test_toml_with_risk_only(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('[model]\nrisk = 0.3\n')
    assert RunConfig.load(path).to_model_params().trade.risk == pytest.approx(0.3)


def test_negative_sigma_rejected():
    config = RunConfig().with_overrides({'model.sigma': -0.5})
    with pytest.raises(ConfigError, match="sigma"):
        config.to_model_params()


@pytest.mark.parametrize("key,value", [
    ('model.gamma', 'abc'),
    ('model.delta', [0.1]),
    ('simulation.n_agents', 2.5),
    ('simulation.record_times', [1, 'x']),
    ('fokker_planck.nx', True),
    ('seed', 'seven'),
])
def test_bad_value_types_rejected(key, value):
    with pytest.raises(ConfigError):
        RunConfig().with_overrides({key: value})


def test_numbers_coerced_to_declared_type():
    config = RunConfig().with_overrides({'model.gamma': 1, 'simulation.n_agents': 5000.0})
    assert config.model.gamma == 0.2
    assert config.simulation.n_agents == 5000


def test_parse_function_rejects_bad_kind():
    with pytest.raises(ConfigError):
        parse_function({'kind': 'exponential'}, 'psi')
    with pytest.raises(ConfigError):
        parse_function({'kind': 'constant', 'exponent': 2}, 'psi')


def test_command_line_values():
    assert parse_value("0.5") == 0.5
    assert parse_value("[1, 2]") == [1, 2]
    assert parse_value("fp2") == "fp2"
    assert split_values("0.1,0.2, [1,2]") == ["0.1", "0.2", "[1,2]"]


def test_parse_grid():
    assert parse_grid("200x100") == (200, 100)
    with pytest.raises(ConfigError):
        parse_grid("200")
