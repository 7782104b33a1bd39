"""
Main application class - coordinates configuration, solvers and bundles
"""

from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional
import logging

import pandas as pd

from config.settings import RunConfig
from core.events import Event, EventBus, EventType, get_event_bus
from core.report import RunReport
from core.services.analysis_service import AnalysisService
from core.services.fokker_planck_service import FokkerPlanckService
from core.services.simulation_service import SimulationService
from data.bundle import BundleWriter
from utils.logging_config import setup_logging

logger = logging.getLogger('wealthkin.application')

PROGRESS_EVERY = 10


class WealthKinApplication:
    """
    Central point of integration for a wealthkin session

    Owns the event bus, the services and the logging setup; every CLI
    subcommand is one method call.
    """

    def __init__(self, config: Optional[RunConfig] = None, event_bus: Optional[EventBus] = None,
                 configure_logging: bool = True):
        self.config = config or RunConfig()
        if configure_logging:
            self._setup_logging()

        self.event_bus = event_bus or get_event_bus()
        self.simulation_service = SimulationService(self.event_bus)
        self.fokker_planck_service = FokkerPlanckService(self.event_bus)
        self.analysis_service = AnalysisService(self.event_bus)

        self._setup_event_handlers()
        logger.debug("Application initialization complete")

    def _setup_logging(self):
        """Configure package logging from the config"""
        log = self.config.logging
        setup_logging(
            log_level=log.level,
            log_to_file=log.log_to_file,
            log_to_console=log.log_to_console,
            log_dir=log.log_dir,
            max_bytes=log.max_log_size_mb * 1024 * 1024,
            backup_count=log.backup_count
        )

    def _setup_event_handlers(self):
        self.event_bus.subscribe(EventType.RUN_STARTED, self._on_run_started)
        self.event_bus.subscribe(EventType.STEP_COMPLETED, self._on_step_completed)
        self.event_bus.subscribe(EventType.VALIDATION_FAILED, self._on_validation_failed)

    def _on_run_started(self, event: Event):
        data = event.data
        logger.info(f"Run started: {data['n_agents']} agents, {data['n_steps']} steps, seed {data['seed']}")

    def _on_step_completed(self, event: Event):
        data = event.data
        if data['step'] % PROGRESS_EVERY == 0:
            logger.debug(
                f"step {data['step']} t={data['t']:g} "
                f"M_K={data['mean_knowledge']:.6g} M_W={data['mean_wealth']:.6g}"
            )

    def _on_validation_failed(self, event: Event):
        if event.data is not None:
            for violation in event.data.get_errors():
                logger.error(repr(violation))

    def simulate(self, out: Optional[Path] = None, strict_tail: bool = False) -> RunReport:
        return self.simulation_service.simulate(self.config, out, strict_tail=strict_tail)

    def solve_fp(self, out: Optional[Path] = None) -> RunReport:
        return self.fokker_planck_service.solve(self.config, out)

    def analyze(self, snapshot: Path, out: Optional[Path] = None, strict_tail: bool = False) -> RunReport:
        return self.analysis_service.analyze(snapshot, self.config, out, strict_tail=strict_tail)

    def compare(self, bundle_a: Path, bundle_b: Path, out: Optional[Path] = None) -> pd.DataFrame:
        return self.analysis_service.compare(bundle_a, bundle_b, out)

    def sweep(self, assignments: Dict[str, List[Any]], mode: str = "simulate",
              out: Optional[Path] = None, strict_tail: bool = False) -> pd.DataFrame:
        """
        Run every point of the Cartesian product of the assignments

        Each point gets its own bundle in ``<out>/point_XXX``; the point to
        assignment table is written as sweep_index.csv.
        """
        out = Path(out or self.config.output.directory)
        keys = list(assignments)
        points = list(product(*(assignments[k] for k in keys)))
        logger.info(f"Sweep over {', '.join(keys)}: {len(points)} points")

        rows = []
        for index, values in enumerate(points):
            point_config = self.config.with_overrides(dict(zip(keys, values)))
            directory = out / f"point_{index:03d}"
            if mode == "fp":
                self.fokker_planck_service.solve(point_config, directory)
            else:
                self.simulation_service.simulate(point_config, directory, strict_tail=strict_tail)
            rows.append({'point': directory.name, **{k: v for k, v in zip(keys, values)}})

        index_frame = pd.DataFrame(rows, columns=['point'] + keys)
        BundleWriter(out, self.event_bus).write_frame("sweep_index", index_frame)
        return index_frame

    def cleanup(self):
        """Detach this application's listeners"""
        self.event_bus.unsubscribe(EventType.RUN_STARTED, self._on_run_started)
        self.event_bus.unsubscribe(EventType.STEP_COMPLETED, self._on_step_completed)
        self.event_bus.unsubscribe(EventType.VALIDATION_FAILED, self._on_validation_failed)


def create_application(config: Optional[RunConfig] = None, **kwargs) -> WealthKinApplication:
    """Factory function to create the application"""
    return WealthKinApplication(config, **kwargs)
