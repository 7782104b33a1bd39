"""
Tests for bundle writing and reading
"""

import numpy as np
import pandas as pd
import pytest

from core.errors import BundleError
from core.events import EventBus, EventType
from core.report import RunReport
from data.bundle import BundleReader, BundleWriter, read_snapshot, snapshot_name


def write_snapshot(path, x, v):
    pd.DataFrame({'x': x, 'v': v}).to_csv(path, index=False)
    return path


def test_snapshot_name():
    assert snapshot_name(10.0) == "snapshot_t10"
    assert snapshot_name(0.5) == "snapshot_t0.5"


def test_report_round_trip(tmp_path):
    bus = EventBus()
    report = RunReport(
        config={'seed': 1},
        moments=pd.DataFrame({'t': [0.0, 1.0], 'mean_wealth': [1.0, 1.0]}),
        frames={
            'marginal_wealth': pd.DataFrame({'center': [0.5, 1.5], 'density': [0.2, 0.8]}),
            'tailfit': pd.DataFrame([{'target': 'wealth', 'slope': -3.0, 'intercept': 0.1,
                                      'n_used': 10, 'residual': 0.01}]),
        },
        summary={'corr_xv': 0.25, 'n_agents': 100},
        timings={'boltzmann_steps': 0.1},
    )
    BundleWriter(tmp_path, bus).write_report(report)

    for name in ('config.json', 'moments.csv', 'marginal_wealth.csv', 'tailfit.csv',
                 'summary.csv', 'timings.csv', 'plot.gp'):
        assert (tmp_path / name).exists()
    assert "plot 'marginal_wealth.csv'" in (tmp_path / "plot.gp").read_text()
    assert "marginal_knowledge" not in (tmp_path / "plot.gp").read_text()

    reader = BundleReader(tmp_path)
    assert reader.config() == {'seed': 1}
    assert reader.summary()['corr_xv'] == '0.25'
    assert reader.tailfit().loc['wealth', 'slope'] == -3.0
    np.testing.assert_allclose(reader.marginal('marginal_wealth')['density'], [0.2, 0.8])
    assert len(bus.get_history(EventType.BUNDLE_WRITTEN)) == 1


def test_read_snapshot(tmp_path):
    x, v = read_snapshot(write_snapshot(tmp_path / "s.csv", [0.5, 1.0], [2.0, 0.0]))
    np.testing.assert_array_equal(x, [0.5, 1.0])
    np.testing.assert_array_equal(v, [2.0, 0.0])


@pytest.mark.parametrize("x, v", [
    ([0.5], [1.0]),
    ([0.5, -1.0], [1.0, 1.0]),
    ([0.5, float('nan')], [1.0, 1.0]),
])
def test_bad_snapshot(tmp_path, x, v):
    with pytest.raises(BundleError):
        read_snapshot(write_snapshot(tmp_path / "s.csv", x, v))


def test_missing_column(tmp_path):
    path = tmp_path / "s.csv"
    pd.DataFrame({'x': [1.0, 2.0], 'w': [1.0, 2.0]}).to_csv(path, index=False)
    with pytest.raises(BundleError, match="missing column"):
        read_snapshot(path)


def test_missing_bundle(tmp_path):
    with pytest.raises(BundleError):
        BundleReader(tmp_path / "nowhere")
