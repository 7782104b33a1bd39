"""
Output bundles: one directory of CSV files per run

Every bundle holds the echoed config (config.json), the CSV outputs and a
gnuplot script. Floats are written with pandas' default shortest round-trip
representation, so identical runs produce identical files; timings.csv is
the only file that changes between identical runs.
"""

from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence
import json
import logging

import numpy as np
import pandas as pd

from core.errors import BundleError
from core.events import EventBus, EventType
from core.report import RunReport

logger = logging.getLogger('wealthkin.bundle')

CONFIG_FILE = "config.json"
PLOT_FILE = "plot.gp"
FINAL_SNAPSHOT = "snapshot_final"

MARGINAL_COLUMNS = ['center', 'density']
SNAPSHOT_COLUMNS = ['x', 'v']


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:g}"


class BundleWriter:
    """Writes RunReports and single frames into a bundle directory"""

    def __init__(self, directory: Path, event_bus: Optional[EventBus] = None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.events = event_bus
        self.written = []

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.directory / f"{name}.csv"
        frame.to_csv(path, index=False)
        self.written.append(path.name)
        logger.debug(f"Wrote {path} ({len(frame)} rows)")
        return path

    def write_config(self, config: Dict) -> Path:
        path = self.directory / CONFIG_FILE
        with open(path, 'w') as f:
            json.dump(config, f, indent=2, sort_keys=True)
            f.write("\n")
        self.written.append(path.name)
        return path

    def write_plot_script(self, stems: Iterable[str]) -> Path:
        """gnuplot script for whichever of the standard outputs the bundle holds"""
        stems = set(stems)
        lines = [
            "# gnuplot -persist plot.gp",
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set grid",
        ]
        plots = [
            ('marginal_knowledge', "knowledge x", "density", "using 1:2 with lines"),
            ('marginal_wealth', "wealth v", "density", "using 1:2 with lines"),
            ('tail_knowledge', "log x", "log P(X > x)", "using 1:2 with points pt 7 ps 0.3"),
            ('tail_wealth', "log v", "log P(V > v)", "using 1:2 with points pt 7 ps 0.3"),
            ('profile_W', "knowledge x", "mean wealth W(x)", "using 1:2 with linespoints"),
            ('profile_K', "wealth v", "mean knowledge K(v)", "using 1:2 with linespoints"),
            ('particles', "knowledge x", "wealth v", "using 1:2 with points pt 7 ps 0.3"),
        ]
        for stem, xlabel, ylabel, style in plots:
            if stem not in stems:
                continue
            lines += [
                "",
                f"set title '{stem}'",
                f"set xlabel '{xlabel}'",
                f"set ylabel '{ylabel}'",
                f"plot '{stem}.csv' {style}",
                "pause -1",
            ]
        if 'joint_density' in stems:
            lines += [
                "",
                "set title 'joint_density'",
                "set xlabel 'knowledge x'",
                "set ylabel 'wealth v'",
                "set view map",
                "splot 'joint_density.csv' using 1:2:3 with points pt 5 palette",
                "pause -1",
            ]

        path = self.directory / PLOT_FILE
        path.write_text("\n".join(lines) + "\n")
        self.written.append(path.name)
        return path

    def write_report(self, report: RunReport, history_name: str = "moments") -> Path:
        """
        Write everything a RunReport holds

        Args:
            report: Completed run
            history_name: File stem for the time series (moments or fp_diagnostics)
        """
        self.write_config(report.config)
        if not report.moments.empty:
            self.write_frame(history_name, report.moments)

        for t, snapshot in sorted(report.snapshots.items()):
            self.write_frame(snapshot_name(t), snapshot.to_frame())

        for name, frame in report.frames.items():
            self.write_frame(name, frame)

        self.write_frame("summary", report.summary_frame())
        self.write_frame("timings", report.timings_frame())
        self.write_plot_script(report.frames)

        logger.info(f"Bundle written to {self.directory} ({len(self.written)} files)")
        if self.events is not None:
            self.events.emit(EventType.BUNDLE_WRITTEN,
                             {'directory': str(self.directory), 'files': list(self.written)},
                             source='BundleWriter')
        return self.directory


def read_csv_checked(path: Path, columns: Sequence[str]) -> pd.DataFrame:
    """
    Read a CSV and require the given numeric columns

    Raises:
        BundleError: missing file, parse failure, missing or non-numeric columns
    """
    path = Path(path)
    if not path.exists():
        raise BundleError(f"missing file: {path}")
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise BundleError(f"cannot parse {path}: {e}") from e

    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise BundleError(f"{path.name}: missing column(s) {', '.join(missing)}")

    for column in columns:
        if not pd.api.types.is_numeric_dtype(frame[column]):
            raise BundleError(f"{path.name}: column '{column}' is not numeric")
    return frame


def read_snapshot(path: Path):
    """
    Load an (x, v) snapshot CSV

    Raises:
        BundleError: malformed file, NaN entries or negative coordinates
    """
    frame = read_csv_checked(path, SNAPSHOT_COLUMNS)
    x = frame['x'].to_numpy(dtype=float)
    v = frame['v'].to_numpy(dtype=float)
    if x.size < 2:
        raise BundleError(f"{Path(path).name}: snapshot needs at least 2 agents, got {x.size}")
    if not (np.isfinite(x).all() and np.isfinite(v).all()):
        raise BundleError(f"{Path(path).name}: snapshot contains non-finite values")
    if (x < 0).any() or (v < 0).any():
        raise BundleError(f"{Path(path).name}: snapshot contains negative coordinates")
    return x, v


class BundleReader:
    """Read access to a finished bundle"""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise BundleError(f"not a bundle directory: {self.directory}")

    def has(self, name: str) -> bool:
        return (self.directory / f"{name}.csv").exists()

    def frame(self, name: str, columns: Sequence[str] = ()) -> pd.DataFrame:
        return read_csv_checked(self.directory / f"{name}.csv", columns)

    def marginal(self, name: str) -> pd.DataFrame:
        return self.frame(name, MARGINAL_COLUMNS)

    def tailfit(self) -> pd.DataFrame:
        frame = read_csv_checked(self.directory / "tailfit.csv", ['slope'])
        if 'target' not in frame.columns:
            raise BundleError("tailfit.csv: missing column target")
        return frame.set_index('target')

    def summary(self) -> Dict[str, str]:
        path = self.directory / "summary.csv"
        if not path.exists():
            raise BundleError(f"missing file: {path}")
        frame = pd.read_csv(path, dtype=str)
        if list(frame.columns) != ['key', 'value']:
            raise BundleError("summary.csv: expected columns key,value")
        return dict(zip(frame['key'], frame['value']))

    def config(self) -> Dict:
        path = self.directory / CONFIG_FILE
        if not path.exists():
            raise BundleError(f"missing file: {path}")
        with open(path) as f:
            return json.load(f)
