"""
Shared fixtures: reference parameter sets and small run configs
"""

import logging
from pathlib import Path

import pytest

from config.settings import RunConfig, load_preset
from core.events import reset_event_bus
from core.model import (
    BackgroundSpec, FunctionSpec, KnowledgeParams, ModelParams, TradeParams,
)
from utils.logging_config import ROOT_LOGGER


@pytest.fixture(autouse=True)
def fresh_event_bus():
    reset_event_bus()
    yield
    reset_event_bus()


@pytest.fixture(autouse=True)
def detach_log_handlers():
    yield
    # console handlers hold on to the captured stderr of the test that installed them
    logging.getLogger(ROOT_LOGGER).handlers.clear()


def make_params(psi: FunctionSpec = None, lam: float = 0.1, lam_b: float = 0.1,
                delta: float = 0.1, gamma: float = 0.1, sigma: float = 0.1) -> ModelParams:
    knowledge = KnowledgeParams(
        selection=FunctionSpec.constant(lam),
        learning=FunctionSpec.constant(lam_b),
        delta=delta,
        background=BackgroundSpec.uniform(2.0),
    )
    trade = TradeParams.from_sigma(
        gamma, sigma,
        psi=psi or FunctionSpec.constant(1.0),
        phi=FunctionSpec.power_law(2.0),
    )
    return ModelParams(knowledge=knowledge, trade=trade)


@pytest.fixture
def test1_params() -> ModelParams:
    """Constant Psi, risk damped by knowledge"""
    return make_params()


@pytest.fixture
def test2_params() -> ModelParams:
    """Trading propensity decreasing with knowledge"""
    return make_params(psi=FunctionSpec.power_law(2.0))


@pytest.fixture
def small_config(tmp_path: Path) -> RunConfig:
    """test1 shrunk to a few thousand agents and a coarse grid"""
    config = load_preset("test1")
    return config.with_overrides({
        'simulation.n_agents': 2000,
        'simulation.t_final': 5.0,
        'simulation.record_times': [2.0],
        'simulation.particle_sample': 100,
        'fokker_planck.nx': 32,
        'fokker_planck.nv': 32,
        'fokker_planck.t_final': 0.5,
        'analysis.top_fraction': 0.05,
        'output.directory': str(tmp_path / "bundle"),
        'logging.level': "WARNING",
    })
