"""
Tests for the logging setup
"""

import logging

import pytest

from utils.logging_config import LogCapture, get_logger, log_performance, setup_logging


def test_file_logs(tmp_path):
    root = setup_logging("WARNING", log_to_file=True, log_to_console=False, log_dir=tmp_path)
    assert root.level == logging.DEBUG
    get_logger('boltzmann').debug("step 1")
    get_logger('boltzmann').error("diverged")
    for handler in root.handlers:
        handler.flush()

    run_log = next(tmp_path.glob("wealthkin_2*.log")).read_text()
    error_log = next(tmp_path.glob("wealthkin_errors_*.log")).read_text()
    assert "step 1" in run_log and "diverged" in run_log
    assert "step 1" not in error_log and "diverged" in error_log


def test_console_only():
    root = setup_logging("ERROR")
    assert root.level == logging.ERROR
    assert not root.propagate
    assert len(root.handlers) == 1


def test_get_logger_prefix():
    assert get_logger('fokker_planck').name == 'wealthkin.fokker_planck'
    assert get_logger('wealthkin.cli').name == 'wealthkin.cli'


def test_log_performance():
    @log_performance
    def solve(x):
        if x < 0:
            raise ValueError("negative")
        return 2 * x

    with LogCapture('wealthkin', logging.INFO) as capture:
        assert solve(2) == 4
        with pytest.raises(ValueError):
            solve(-1)
    messages = capture.get_messages()
    assert any(m.startswith("solve completed in") for m in messages)
    assert any(m.startswith("solve failed after") for m in messages)
