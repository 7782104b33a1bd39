"""
Analysis service layer - snapshot analysis and bundle comparison
"""

from pathlib import Path
from typing import Dict, List, Optional
import logging
import math

import numpy as np
import pandas as pd

from config.settings import RunConfig
from core.analytics.distribution_analyzer import DistributionAnalyzer, sample_moments
from core.errors import BundleError
from core.events import EventBus
from core.report import RunReport
from data.bundle import BundleReader, BundleWriter, read_snapshot
from utils.logging_config import log_performance

logger = logging.getLogger('wealthkin.services.analysis')

COMPARISON_COLUMNS = ['metric', 'a', 'b', 'difference']


def marginal_l1(a: pd.DataFrame, b: pd.DataFrame, name: str) -> float:
    """
    L1 distance between two binned densities

    Raises:
        BundleError: the two marginals are not on identical bins
    """
    ca = a['center'].to_numpy(dtype=float)
    cb = b['center'].to_numpy(dtype=float)
    if ca.size != cb.size or not np.allclose(ca, cb, rtol=1e-12, atol=1e-12):
        raise BundleError(f"{name}: bins differ ({ca.size} vs {cb.size} bins)")
    if ca.size < 2:
        raise BundleError(f"{name}: need at least two bins")
    width = ca[1] - ca[0]
    return float(np.abs(a['density'].to_numpy() - b['density'].to_numpy()).sum() * width)


def _float(value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        return float('nan')


class AnalysisService:
    """Service layer for stand-alone analysis"""

    def __init__(self, event_bus: EventBus):
        self.events = event_bus

    @log_performance
    def analyze(self, snapshot: Path, config: RunConfig, out: Optional[Path] = None,
                strict_tail: bool = False) -> RunReport:
        """
        Emit every analysis output for a snapshot CSV

        Raises:
            BundleError: malformed snapshot
            TailFitError: too few tail samples and strict_tail set
        """
        x, v = read_snapshot(snapshot)
        logger.info(f"Analyzing {x.size} agents from {snapshot}")

        analyzer = DistributionAnalyzer.from_config(config.analysis, strict_tail=strict_tail)
        frames = analyzer.analyze(x, v)

        m = sample_moments(x, v)
        summary = {
            'n_agents': m.n,
            'mean_knowledge': m.mean_knowledge,
            'mean_wealth': m.mean_wealth,
            'var_knowledge': m.var_knowledge,
            'var_wealth': m.var_wealth,
            'corr_xv': m.corr_xv,
            'corr_significant': int(m.corr_significant()),
        }
        for row in frames['tailfit'].itertuples(index=False):
            summary[f'tail_slope_{row.target}'] = row.slope

        report = RunReport(config=config.to_dict(), frames=frames, summary=summary)
        out = Path(out or config.output.directory)
        BundleWriter(out, self.events).write_report(report)
        return report

    @log_performance
    def compare(self, bundle_a: Path, bundle_b: Path, out: Optional[Path] = None) -> pd.DataFrame:
        """
        Distances between two bundles; differences are B - A

        Raises:
            BundleError: missing marginals or mismatched bins
        """
        a, b = BundleReader(bundle_a), BundleReader(bundle_b)
        changed = self._model_differences(a, b)
        if changed:
            logger.info(f"Bundles differ in model settings: {', '.join(changed)}")
        rows = []

        for target in ('knowledge', 'wealth'):
            name = f"marginal_{target}"
            distance = marginal_l1(a.marginal(name), b.marginal(name), name)
            rows.append({'metric': f"l1_{target}", 'a': float('nan'), 'b': float('nan'),
                         'difference': distance})

        slopes_a = self._slopes(a)
        slopes_b = self._slopes(b)
        for target in ('knowledge', 'wealth'):
            sa, sb = slopes_a.get(target, float('nan')), slopes_b.get(target, float('nan'))
            rows.append({'metric': f"tail_slope_{target}", 'a': sa, 'b': sb, 'difference': sb - sa})

        corr_a = self._corr(a)
        corr_b = self._corr(b)
        rows.append({'metric': 'corr_xv', 'a': corr_a, 'b': corr_b, 'difference': corr_b - corr_a})

        comparison = pd.DataFrame(rows, columns=COMPARISON_COLUMNS)
        if out is not None:
            BundleWriter(Path(out), self.events).write_frame("comparison", comparison)

        l1_wealth = comparison.loc[comparison['metric'] == 'l1_wealth', 'difference'].iloc[0]
        logger.info(f"Compared {bundle_a} with {bundle_b}: wealth L1 distance {l1_wealth:.4g}")
        return comparison

    @staticmethod
    def _model_differences(a: BundleReader, b: BundleReader) -> List[str]:
        """Model keys whose echoed values differ; empty when either echo is missing"""
        try:
            model_a = a.config().get('model', {})
            model_b = b.config().get('model', {})
        except BundleError:
            return []
        return sorted(k for k in set(model_a) | set(model_b) if model_a.get(k) != model_b.get(k))

    @staticmethod
    def _slopes(reader: BundleReader) -> Dict[str, float]:
        if not reader.has("tailfit"):
            return {}
        fits = reader.tailfit()
        return {target: _float(fits.loc[target, 'slope']) for target in fits.index}

    @staticmethod
    def _corr(reader: BundleReader) -> float:
        try:
            value = _float(reader.summary().get('corr_xv'))
        except BundleError:
            return float('nan')
        return value if math.isfinite(value) else float('nan')
