"""
Tests for parameter, simulation and grid validation
"""

from dataclasses import replace

from core.boltzmann import SimConfig
from core.fokker_planck import Grid2D
from core.model import FunctionSpec, TradeParams
from core.validation.validator import (
    GridValidator, Severity, SimConfigValidator, ValidationReport, validate_params,
)


def test_reference_sets_are_valid(test1_params, test2_params):
    assert validate_params(test1_params).is_valid()
    assert validate_params(test2_params).is_valid()


def test_gamma_out_of_range(test1_params):
    mp = replace(test1_params, trade=replace(test1_params.trade, gamma=1.5))
    report = validate_params(mp)
    assert 'GAMMA_RANGE' in report.codes()


def test_nonnegativity_guarantee(test1_params):
    mp = replace(test1_params, trade=TradeParams(gamma=0.5, risk=0.6))
    report = validate_params(mp)
    errors = [r for r in report.get_errors() if r.code == 'NONNEGATIVITY_GUARANTEE']
    assert errors
    assert "nonnegativity guarantee violated" in errors[0].message


def test_kappa_bound(test1_params):
    kp = replace(test1_params.knowledge, delta=0.9)
    report = validate_params(replace(test1_params, knowledge=kp))
    assert 'KAPPA_BOUND' in report.codes()


def test_lambda_outside_declared_bounds(test1_params):
    kp = replace(test1_params.knowledge, selection=FunctionSpec.constant(0.3), lambda_plus=0.2)
    report = validate_params(replace(test1_params, knowledge=kp))
    assert 'LAMBDA_BOUNDS' in report.codes()


def test_all_violations_collected(test1_params):
    trade = TradeParams(gamma=1.5, risk=-1.0)
    kp = replace(test1_params.knowledge, delta=-1.0)
    report = validate_params(replace(test1_params, knowledge=kp, trade=trade))
    assert {'GAMMA_RANGE', 'RISK_NEGATIVE', 'DELTA_NEGATIVE'} <= set(report.codes())


class TestSimConfig:
    def test_valid(self):
        assert SimConfigValidator().validate(SimConfig(n_agents=100)).is_valid()

    def test_too_few_agents(self):
        assert 'TOO_FEW_AGENTS' in SimConfigValidator().validate(SimConfig(n_agents=1)).codes()

    def test_interaction_probability_above_one(self):
        report = SimConfigValidator().validate(SimConfig(n_agents=100, dt=0.5, epsilon=0.1))
        assert 'DT_RANGE' in report.codes()

    def test_no_pairs(self):
        report = SimConfigValidator().validate(SimConfig(n_agents=3, dt=0.1, epsilon=1.0))
        assert 'NO_PAIRS' in report.codes()

    def test_warnings_do_not_fail(self):
        cfg = SimConfig(n_agents=100, dt=1.0, t_final=2.5, record_times=[7.0])
        report = SimConfigValidator().validate(cfg)
        assert report.is_valid()
        assert {w.code for w in report.get_warnings()} == {'T_FINAL_GRID', 'RECORD_TIME_RANGE'}


def test_grid_too_small():
    report = GridValidator().validate(Grid2D(nx=8, nv=200))
    assert report.codes() == ['GRID_TOO_SMALL']


def test_report_rendering():
    report = ValidationReport()
    report.add_error('trade.gamma', "out of range", 'GAMMA_RANGE')
    report.add_warning('simulation.t_final', "not a multiple", 'T_FINAL_GRID')
    text = str(report)
    assert "1 error(s), 1 warning(s)" in text
    assert "ERROR: trade.gamma - out of range [GAMMA_RANGE]" in text
    assert report.get_warnings()[0].severity is Severity.WARNING
