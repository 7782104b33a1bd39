"""
Tests for the finite-volume Fokker-Planck solver
"""

from dataclasses import replace

import numpy as np
import pytest

from config.settings import load_preset
from core.boltzmann import InitKind, InitSpec
from core.errors import ParameterError, StabilityError
from core.events import EventBus, EventType
from core.fokker_planck import (
    DIAGNOSTIC_COLUMNS, Equation, Field2D, FokkerPlanckSolver, Grid2D, cell_diffusion, compute_MW,
    face_weights, field_marginal, field_moments, fp_coefficients, fp_run, fp_step,
    product_initial_field,
)
from core.services.analysis_service import marginal_l1
from core.services.fokker_planck_service import FokkerPlanckService
from core.services.simulation_service import SimulationService

# cell edges fall on 1 and 2, so the uniform initial laws are represented exactly
GRID = Grid2D(x_max=8.0, v_max=8.0, nx=32, nv=32)


def initial_field(grid: Grid2D = GRID) -> Field2D:
    return product_initial_field(grid, InitSpec(wealth=InitKind.UNIFORM, knowledge=InitKind.UNIFORM))


class TestGrid:
    def test_geometry(self):
        grid = Grid2D(x_max=2.0, v_max=4.0, nx=20, nv=40)
        assert grid.dx == pytest.approx(0.1)
        assert grid.dv == pytest.approx(0.1)
        assert grid.x_centers[0] == pytest.approx(0.05)
        assert grid.v_edges[-1] == pytest.approx(4.0)


class TestCoefficients:
    def test_scalar_values(self, test1_params):
        a_x, a_v, d_x, d_v = fp_coefficients(2.0, 3.0, test1_params, 1.0)
        # a_x = x lambda - lambda_B M, a_v = gamma (Psi v - M_W)
        assert a_x == pytest.approx(0.1)
        assert a_v == pytest.approx(0.2)
        assert d_x == pytest.approx(0.2)
        assert d_v == pytest.approx(0.5 * 0.1 * (1 / 9) ** 2 * 9)

    def test_mean_wealth_integral(self, test2_params):
        grid = Grid2D(x_max=2.0, v_max=2.0, nx=200, nv=200)
        h = Field2D(values=np.full((200, 200), 0.25), grid=grid)
        assert compute_MW(h, test2_params) == pytest.approx(1.0 / 3.0, abs=1e-4)


class TestInitialField:
    def test_unit_mass(self):
        h = initial_field()
        assert h.mass() == pytest.approx(1.0, rel=1e-14)
        assert h.mean_knowledge() == pytest.approx(0.5, abs=1e-12)
        assert h.mean_wealth() == pytest.approx(1.0, abs=1e-12)

    def test_point_mass_wealth(self):
        h = product_initial_field(GRID, InitSpec(wealth=InitKind.EQUAL, knowledge=InitKind.EQUAL,
                                                 knowledge_value=2.0))
        # both atoms sit on cell edges and are split between two cells
        assert np.count_nonzero(h.values) == 4
        assert h.mass() == pytest.approx(1.0)
        assert h.mean_wealth() == pytest.approx(1.0, abs=1e-12)
        assert h.mean_knowledge() == pytest.approx(2.0, abs=1e-12)

    def test_point_mass_between_centers(self):
        h = product_initial_field(GRID, InitSpec(knowledge=InitKind.EQUAL, knowledge_value=0.33))
        np.testing.assert_allclose(h.marginal_x()[:2] * GRID.dx, [0.18, 0.82])
        assert h.mean_knowledge() == pytest.approx(0.33, abs=1e-12)

    def test_default_grid_keeps_mean_wealth(self):
        assert product_initial_field(Grid2D(), InitSpec()).mean_wealth() == pytest.approx(1.0, abs=1e-12)

    def test_rebinned_marginal(self):
        h = initial_field()
        edges = np.linspace(0.0, 8.0, 41)
        density = field_marginal(h, 'v', edges)
        assert (density * np.diff(edges)).sum() == pytest.approx(1.0)
        assert density[:10] == pytest.approx(np.full(10, 0.5))
        assert np.all(density[10:] == 0)


class TestFaceWeights:
    def test_centered_when_diffusion_dominates(self):
        forward, backward = face_weights(np.array([0.1]), np.array([1.0, 1.0]), 0.1)
        assert forward[0] == pytest.approx(10.05)
        assert backward[0] == pytest.approx(9.95)

    def test_upwind_limit_for_pure_drift(self):
        forward, backward = face_weights(np.array([2.0, -2.0]), np.zeros(3), 0.5)
        np.testing.assert_allclose(forward, [2.0, 0.0])
        np.testing.assert_allclose(backward, [0.0, 2.0])

    def test_cell_diffusion_covers_both_faces(self):
        np.testing.assert_allclose(cell_diffusion(np.array([0.4, -1.0]), np.full(3, 0.1), 1.0),
                                   [0.2, 0.5, 0.5])


class TestStep:
    def test_stability_error(self, test1_params):
        h = initial_field()
        bound = FokkerPlanckSolver(GRID, test1_params).stability_bound(compute_MW(h, test1_params))
        assert bound > 0
        with pytest.raises(StabilityError):
            fp_step(h, test1_params, 2.0 * bound)

    def test_conserves_mass_and_positivity(self, test2_params):
        h = initial_field()
        solver = FokkerPlanckSolver(GRID, test2_params)
        for _ in range(50):
            mw = compute_MW(h, test2_params)
            h = solver.step(h, solver.stability_bound(mw), mw)
            assert h.mass() == pytest.approx(1.0, rel=1e-12)
            assert h.values.min() >= 0.0

    def test_zero_dtau_is_identity(self, test1_params):
        h = initial_field()
        new = fp_step(h, test1_params, 0.0)
        np.testing.assert_array_equal(new.values, h.values)


class TestRun:
    def test_history_and_summary(self, test1_params):
        field, diagnostics = fp_run(GRID, test1_params, initial_field(), t_final=0.2, tol=0.0,
                                    record_every=5)
        history = diagnostics.history
        assert list(history.columns) == DIAGNOSTIC_COLUMNS
        assert np.isnan(history['l1_rate'].iloc[0])
        assert history['tau'].iloc[-1] == pytest.approx(0.2)
        assert field.tau == pytest.approx(0.2)
        assert not diagnostics.stationary
        assert abs(diagnostics.summary['mass_drift']) < 1e-12
        assert diagnostics.summary['min_value'] >= 0.0

    def test_stationary_stop(self, test1_params):
        _, diagnostics = fp_run(GRID, test1_params, initial_field(), t_final=10.0, tol=1e9)
        assert diagnostics.stationary
        assert diagnostics.steps == 1

    def test_max_steps(self, test1_params):
        field, diagnostics = fp_run(GRID, test1_params, initial_field(), t_final=10.0, tol=0.0,
                                    max_steps=3)
        assert diagnostics.steps == 3
        assert diagnostics.history['tau'].iloc[-1] == field.tau

    def test_frozen_mean_wealth(self, test2_params):
        _, diagnostics = fp_run(GRID, test2_params, initial_field(), t_final=0.1, tol=0.0,
                                equation=Equation.FP2)
        assert diagnostics.summary['equation'] == 'fp2'
        assert abs(diagnostics.summary['mass_drift']) < 1e-12

    def test_frozen_mean_wealth_does_not_drift(self, test1_params):
        # constant Psi: the grid mean wealth is a fixed point of the frozen-M_W update
        grid = Grid2D(x_max=8.0, v_max=8.0, nx=64, nv=64)
        init = product_initial_field(grid, InitSpec())
        _, diagnostics = fp_run(grid, test1_params, init, t_final=2.0, tol=0.0, equation=Equation.FP2)
        summary = diagnostics.summary
        assert abs(summary['mean_wealth_drift']) <= summary['tail_mass'] + 1e-9

    def test_pure_knowledge_mean(self, test1_params):
        # no trade and no noise: dM_K/dtau = lambda_B M - lambda M_K
        kp = replace(test1_params.knowledge, delta=0.0)
        tp = replace(test1_params.trade, gamma=1e-9, risk=0.0)
        mp = replace(test1_params, knowledge=kp, trade=tp)
        grid = Grid2D(x_max=4.0, v_max=4.0, nx=400, nv=16)
        field, _ = fp_run(grid, mp, initial_field(grid), t_final=1.0, tol=0.0)
        expected = 1.0 - 0.5 * np.exp(-0.1)
        assert field_moments(field)['mean_knowledge'] == pytest.approx(expected, abs=3e-3)

    def test_invalid_grid(self, test1_params):
        grid = Grid2D(nx=8, nv=8)
        with pytest.raises(ParameterError) as info:
            fp_run(grid, test1_params, initial_field(grid), t_final=1.0, tol=0.0)
        assert 'GRID_TOO_SMALL' in info.value.report.codes()

    def test_events(self, test1_params):
        bus = EventBus()
        fp_run(GRID, test1_params, initial_field(), t_final=0.05, tol=0.0, event_bus=bus)
        assert len(bus.get_history(EventType.FP_STARTED)) == 1
        assert len(bus.get_history(EventType.FP_FINISHED)) == 1


@pytest.mark.slow
def test_full_grid_conserves_mass(test2_params):
    grid = Grid2D()
    field, diagnostics = fp_run(grid, test2_params, initial_field(grid), t_final=5.0, tol=1e-6)
    assert abs(diagnostics.summary['mass_drift']) < 1e-10
    assert field.values.min() >= 0.0


@pytest.mark.slow
def test_stationary_marginals_match_scaled_monte_carlo():
    config = load_preset("test1-fp")
    fp_report = FokkerPlanckService(EventBus()).run(config)
    mc_report = SimulationService(EventBus()).run(config)
    assert fp_report.summary['stationary'] == 1

    fp_frames, mc_frames = fp_report.frames, mc_report.frames
    distance = marginal_l1(fp_frames['marginal_wealth'], mc_frames['marginal_wealth'], 'marginal_wealth')
    assert distance <= 0.05

    # the Fokker-Planck density sits closer to zero near the origin
    for name in ('marginal_knowledge', 'marginal_wealth'):
        fp_first = fp_frames[name]['density'].iloc[0]
        mc_first = mc_frames[name]['density'].iloc[0]
        assert fp_first <= mc_first + 1e-3, name
