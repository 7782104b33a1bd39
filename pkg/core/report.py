"""
Run report shared by the Monte Carlo and Fokker-Planck pipelines
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import pandas as pd


@dataclass
class RunReport:
    """
    Everything one run produces

    Attributes:
        config: Fully resolved configuration (dict form)
        moments: Time series of moments, one row per recorded step
        snapshots: Population snapshots keyed by record time
        final: Final state (Population or Field2D)
        frames: Analysis outputs keyed by file stem
        summary: Flat key/value results
        timings: Wall-clock seconds per phase
    """
    config: Dict[str, Any]
    moments: pd.DataFrame = field(default_factory=pd.DataFrame)
    snapshots: Dict[float, Any] = field(default_factory=dict)
    final: Optional[Any] = None
    frames: Dict[str, pd.DataFrame] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def timings_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{'phase': name, 'seconds': seconds} for name, seconds in self.timings.items()],
            columns=['phase', 'seconds']
        )

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{'key': key, 'value': value} for key, value in self.summary.items()],
            columns=['key', 'value']
        )
