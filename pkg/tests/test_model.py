"""
Tests for the microscopic interaction rules
"""

import math

import numpy as np
import pytest

from core.errors import ParameterError, SamplingError
from core.model import (
    Agent, BackgroundSpec, FunctionSpec, KnowledgeParams, TradeParams,
    drift_D, eval_function, exchange, knowledge_post_interaction, trade_post_interaction,
    trade_post_interaction_cpt,
)


def knowledge(lam, lam_b, delta=0.0, background=None):
    return KnowledgeParams(
        selection=FunctionSpec.constant(lam),
        learning=FunctionSpec.constant(lam_b),
        delta=delta,
        background=background or BackgroundSpec.uniform(2.0),
    )


class TestFunctionSpec:
    def test_power_law_value(self):
        assert FunctionSpec.power_law(2.0).evaluate(1.0) == pytest.approx(0.25)

    def test_eval_function_matches_evaluate(self):
        spec = FunctionSpec.power_law(2.0)
        assert eval_function(spec, 1.0) == pytest.approx(0.25)
        assert eval_function(FunctionSpec.constant(0.1), 7.0) == pytest.approx(0.1)

    def test_power_law_vectorized(self):
        values = FunctionSpec.power_law(1.0).evaluate(np.array([0.0, 1.0, 3.0]))
        np.testing.assert_allclose(values, [1.0, 0.5, 0.25])

    def test_constant_broadcasts(self):
        values = FunctionSpec.constant(0.3).evaluate(np.zeros(4))
        assert values.shape == (4,)
        assert np.all(values == 0.3)

    def test_bounds(self):
        pl = FunctionSpec.power_law(2.0)
        assert pl.sup() == 1.0
        assert pl.inf() == 0.0
        assert FunctionSpec.constant(0.2).sup() == FunctionSpec.constant(0.2).inf() == 0.2

    def test_scaled_keeps_shape(self):
        scaled = FunctionSpec.power_law(2.0).scaled(0.1)
        assert scaled.evaluate(1.0) == pytest.approx(0.025)
        assert scaled.sup() == pytest.approx(0.1)
        assert not scaled.is_constant()


class TestBackground:
    def test_means(self):
        assert BackgroundSpec.uniform(2.0).mean == pytest.approx(1.0)
        assert BackgroundSpec.point_mass(3.0).mean == pytest.approx(3.0)


class TestKnowledgeInteraction:
    def test_learning_from_background(self):
        kp = knowledge(0.1, 0.1)
        assert knowledge_post_interaction(1.0, 2.0, 0.0, kp) == pytest.approx(1.1)

    def test_forgetting_with_noise(self):
        kp = knowledge(0.5, 0.0, delta=0.0625)
        assert knowledge_post_interaction(2.0, 5.0, -0.25, kp) == pytest.approx(0.5)

    def test_worst_case_noise_keeps_knowledge_nonnegative(self):
        kp = knowledge(0.2, 0.0, delta=0.64)
        x = np.array([0.0, 0.5, 7.0])
        result = knowledge_post_interaction(x, np.zeros(3), np.full(3, -0.8), kp)
        assert np.all(result >= 0)

    def test_kappa_below_bound_rejected(self):
        kp = knowledge(0.5, 0.0)
        with pytest.raises(SamplingError):
            knowledge_post_interaction(1.0, 0.0, -0.6, kp)

    def test_monotone_in_background(self):
        kp = KnowledgeParams(
            selection=FunctionSpec.power_law(1.0, 0.3),
            learning=FunctionSpec.power_law(2.0, 0.2),
            delta=0.04,
            background=BackgroundSpec.uniform(2.0),
        )
        z = np.linspace(0.0, 2.0, 41)
        for x in (0.0, 0.7, 5.0):
            for kappa in (-0.2, 0.0, 0.2):
                result = knowledge_post_interaction(np.full(z.size, x), z, np.full(z.size, kappa), kp)
                assert np.all(np.diff(result) >= 0)


class TestTrade:
    def test_knowledge_modulated_trade(self):
        r = math.sqrt(0.1)
        tp = TradeParams(gamma=0.1, risk=r, psi=FunctionSpec.constant(1.0), phi=FunctionSpec.power_law(2.0))
        v_star, w_star = trade_post_interaction(Agent(1.0, 1.0), Agent(0.0, 1.0), r, -r, tp)
        assert v_star == pytest.approx(1.079057, abs=1e-6)
        assert w_star == pytest.approx(0.683772, abs=1e-6)

    def test_riskless_trade_conserves_wealth(self):
        tp = TradeParams(gamma=0.3, risk=0.0, psi=FunctionSpec.power_law(2.0))
        rng = np.random.default_rng(3)
        x, y = rng.uniform(0, 5, 50), rng.uniform(0, 5, 50)
        v, w = rng.uniform(0, 3, 50), rng.uniform(0, 3, 50)
        v_star, w_star = exchange(x, v, y, w, 0.0, 0.0, tp)
        np.testing.assert_allclose(v_star + w_star, v + w, rtol=1e-12)

    def test_four_risk_outcomes_conserve_mean_wealth(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            if rng.random() < 0.5:
                psi = FunctionSpec.power_law(rng.uniform(0.5, 3.0))
            else:
                psi = FunctionSpec.constant(rng.uniform(0.0, 1.0))
            phi = FunctionSpec.power_law(rng.uniform(0.5, 3.0))
            gamma = rng.uniform(0.01, 0.99)
            # stay inside 1 - gamma sup(Psi) - r sup(Phi) >= 0
            risk = rng.uniform(0.0, 1.0) * (1.0 - gamma * psi.sup()) / phi.sup()
            tp = TradeParams(gamma=gamma, risk=risk, psi=psi, phi=phi)
            x, v, y, w = rng.uniform(0.0, 10.0, 4)

            outcomes = [exchange(x, v, y, w, s1 * risk, s2 * risk, tp)
                        for s1 in (1.0, -1.0) for s2 in (1.0, -1.0)]
            assert min(min(pair) for pair in outcomes) >= 0.0
            mean_total = sum(v_star + w_star for v_star, w_star in outcomes) / 4.0
            assert mean_total == pytest.approx(v + w, rel=1e-12)

    def test_constant_psi_phi_reduces_to_cpt(self):
        tp = TradeParams(gamma=0.2, risk=0.3)
        v_star, w_star = exchange(2.0, 1.5, 0.7, 0.5, 0.3, -0.3, tp)
        expected = trade_post_interaction_cpt(1.5, 0.5, 0.3, -0.3, 0.2)
        assert (v_star, w_star) == pytest.approx(expected)

    def test_sigma_and_risk(self):
        tp = TradeParams.from_sigma(0.1, 0.04)
        assert tp.risk == pytest.approx(0.2)
        assert tp.sigma == pytest.approx(0.04)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ParameterError, match="sigma"):
            TradeParams.from_sigma(0.1, -0.5)

    def test_nonnegativity_margin(self):
        assert TradeParams(gamma=0.5, risk=0.6).nonnegativity_margin() < 0
        assert TradeParams(gamma=0.1, risk=0.3).nonnegativity_margin() > 0


def test_drift():
    kp = knowledge(0.2, 0.1, background=BackgroundSpec.point_mass(2.0))
    assert drift_D(3.0, kp) == pytest.approx(-0.4)
