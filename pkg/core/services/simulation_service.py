"""
Simulation service layer - Monte Carlo runs from a RunConfig to a bundle
"""

from pathlib import Path
from typing import Dict, Optional
import logging
import time

import numpy as np
import pandas as pd

from config.settings import RunConfig
from core import boltzmann
from core.analytics.distribution_analyzer import (
    DistributionAnalyzer, analytic_mean_knowledge, discrete_mean_knowledge,
    mean_knowledge_bound, moments,
)
from core.boltzmann import Population
from core.errors import ParameterError
from core.events import EventBus, EventType
from core.model import ModelParams
from core.report import RunReport
from core.sampling import RngStream, StreamRole
from data.bundle import FINAL_SNAPSHOT, BundleWriter
from utils.logging_config import log_performance

logger = logging.getLogger('wealthkin.services.simulation')

MEAN_CHECK_COLUMNS = ['t', 'empirical', 'analytic', 'discrete', 'bound']


def particle_subsample(pop: Population, count: int, seed: int) -> pd.DataFrame:
    """A seeded random subset of the agents, in index order"""
    n = len(pop)
    if count <= 0:
        return pd.DataFrame({'x': [], 'v': []})
    if count >= n:
        return pop.to_frame()
    gen = RngStream(seed).substream(StreamRole.PARTICLES).generator()
    index = np.sort(gen.choice(n, size=count, replace=False))
    return pd.DataFrame({'x': pop.x[index], 'v': pop.v[index]})


def mean_knowledge_check(moment_frame: pd.DataFrame, mp: ModelParams, dt: float) -> Optional[pd.DataFrame]:
    """Empirical mean knowledge against the exact laws; None unless lambda, lambda_B are constant"""
    kp = mp.knowledge
    if not (kp.selection.is_constant() and kp.learning.is_constant()) or kp.selection.value <= 0:
        return None

    lam, lam_b, m_bg = kp.selection.value, kp.learning.value, kp.background_mean
    t = moment_frame['t'].to_numpy()
    m0 = float(moment_frame['mean_knowledge'].iloc[0])
    steps = np.arange(t.size)

    return pd.DataFrame({
        't': t,
        'empirical': moment_frame['mean_knowledge'].to_numpy(),
        'analytic': analytic_mean_knowledge(t, m0, lam, lam_b, m_bg),
        'discrete': discrete_mean_knowledge(steps, dt, m0, lam, lam_b, m_bg),
        'bound': np.full(t.size, mean_knowledge_bound(kp)),
    }, columns=MEAN_CHECK_COLUMNS)


class SimulationService:
    """
    Service layer for Monte Carlo runs
    Builds the domain objects, runs the solver, analyzes the final state and writes the bundle
    """

    def __init__(self, event_bus: EventBus):
        self.events = event_bus

    def run(self, config: RunConfig, strict_tail: bool = False) -> RunReport:
        """
        Run and analyze without touching the disk

        Raises:
            ParameterError: invalid model or simulation parameters
            ConfigError: config cannot be turned into domain objects
        """
        mp = config.to_model_params()
        cfg = config.to_sim_config()

        try:
            report = boltzmann.run(cfg, mp, event_bus=self.events)
        except ParameterError as e:
            self.events.emit(EventType.VALIDATION_FAILED, e.report, source='SimulationService')
            raise

        start = time.perf_counter()
        final: Population = report.final
        analyzer = DistributionAnalyzer.from_config(config.analysis, strict_tail=strict_tail)
        frames: Dict[str, pd.DataFrame] = analyzer.analyze(final.x, final.v)

        frames[FINAL_SNAPSHOT] = final.to_frame()
        frames['particles'] = particle_subsample(final, config.simulation.particle_sample, config.seed)
        check = mean_knowledge_check(report.moments, mp, cfg.dt)
        if check is not None:
            frames['mean_knowledge_check'] = check
        report.timings['analysis'] = time.perf_counter() - start

        report.config = config.to_dict()
        report.frames = frames
        report.summary = self._summary(final, frames['tailfit'], cfg)
        return report

    def _summary(self, final: Population, tailfit: pd.DataFrame, cfg) -> Dict:
        m = moments(final)
        summary = {
            'n_agents': len(final),
            'steps': final.step_index,
            't_final': final.t,
            'seed': cfg.seed,
            'mean_knowledge': m.mean_knowledge,
            'mean_wealth': m.mean_wealth,
            'var_knowledge': m.var_knowledge,
            'var_wealth': m.var_wealth,
            'corr_xv': m.corr_xv,
            'corr_significant': int(m.corr_significant()),
        }
        for row in tailfit.itertuples(index=False):
            summary[f'tail_slope_{row.target}'] = row.slope
        return summary

    @log_performance
    def simulate(self, config: RunConfig, out: Optional[Path] = None,
                 strict_tail: bool = False) -> RunReport:
        """
        Run the Monte Carlo solver and write its bundle

        Args:
            config: Fully resolved run configuration
            out: Bundle directory (defaults to config.output.directory)
            strict_tail: Fail instead of writing NaN rows when a tail fit is impossible
        """
        out = Path(out or config.output.directory)
        report = self.run(config, strict_tail=strict_tail)
        BundleWriter(out, self.events).write_report(report, history_name='moments')
        logger.info(
            f"Simulation finished: mean wealth {report.summary['mean_wealth']:.6g}, "
            f"corr {report.summary['corr_xv']:.4g}"
        )
        return report
