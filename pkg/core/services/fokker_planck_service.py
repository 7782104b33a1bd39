"""
Fokker-Planck service layer - PDE runs from a RunConfig to a bundle
"""

from pathlib import Path
from typing import Optional, Sequence, Tuple
import logging
import time

import numpy as np
import pandas as pd

from config.settings import RunConfig
from core.errors import ParameterError
from core.events import EventBus, EventType
from core.fokker_planck import (
    Field2D, field_marginal, field_moments, fp_run, product_initial_field,
)
from core.report import RunReport
from core.validation.validator import GridValidator
from data.bundle import BundleWriter
from utils.logging_config import log_performance

logger = logging.getLogger('wealthkin.services.fokker_planck')


def marginal_frame(field: Field2D, axis: str, value_range: Sequence[float], bins: int) -> pd.DataFrame:
    """Field marginal on the same bin layout as a Monte Carlo marginal"""
    edges = np.linspace(value_range[0], value_range[1], bins + 1)
    return pd.DataFrame({
        'center': 0.5 * (edges[:-1] + edges[1:]),
        'density': field_marginal(field, axis, edges),
    })


class FokkerPlanckService:
    """Service layer for Fokker-Planck runs"""

    def __init__(self, event_bus: EventBus):
        self.events = event_bus

    def _ranges(self, config: RunConfig) -> Tuple[Sequence[float], Sequence[float]]:
        analysis = config.analysis
        grid = config.to_grid()
        return (analysis.knowledge_range or (0.0, grid.x_max),
                analysis.wealth_range or (0.0, grid.v_max))

    def run(self, config: RunConfig) -> RunReport:
        """
        Solve and post-process without touching the disk

        Raises:
            ParameterError: invalid coefficients or grid
        """
        mp = config.to_model_params()
        grid = config.to_grid()
        equation = config.equation()
        fp = config.fokker_planck

        grid_report = GridValidator().validate(grid)
        if not grid_report.is_valid():
            raise ParameterError("Fokker-Planck grid failed validation", grid_report)

        init = product_initial_field(grid, config.to_sim_config().init)
        start = time.perf_counter()
        try:
            field, diagnostics = fp_run(
                grid, mp, init, fp.t_final, fp.tol,
                equation=equation, record_every=fp.record_every,
                max_steps=fp.max_steps, event_bus=self.events,
            )
        except ParameterError as e:
            self.events.emit(EventType.VALIDATION_FAILED, e.report, source='FokkerPlanckService')
            raise
        elapsed = time.perf_counter() - start

        x_range, v_range = self._ranges(config)
        bins = config.analysis.marginal_bins
        frames = {
            'marginal_knowledge': marginal_frame(field, 'x', x_range, bins),
            'marginal_wealth': marginal_frame(field, 'v', v_range, bins),
            'fp_field': field.to_frame(),
            'fp_summary': pd.DataFrame(
                [{'key': k, 'value': v} for k, v in diagnostics.summary.items()],
                columns=['key', 'value']
            ),
        }

        summary = dict(field_moments(field))
        summary['stationary'] = int(diagnostics.stationary)
        summary['tau'] = field.tau

        if abs(diagnostics.summary['mass_drift']) > 1e-10:
            logger.warning(f"Mass drift {diagnostics.summary['mass_drift']:.3g} exceeds 1e-10")
        if not diagnostics.stationary:
            logger.info(f"Not stationary at tau={field.tau:g} (tol={fp.tol:g})")

        return RunReport(
            config=config.to_dict(),
            moments=diagnostics.history,
            final=field,
            frames=frames,
            summary=summary,
            timings={'fokker_planck_steps': elapsed},
        )

    @log_performance
    def solve(self, config: RunConfig, out: Optional[Path] = None) -> RunReport:
        """Run the Fokker-Planck solver and write its bundle"""
        out = Path(out or config.output.directory)
        report = self.run(config)
        BundleWriter(out, self.events).write_report(report, history_name='fp_diagnostics')
        return report
