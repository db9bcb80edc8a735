from __future__ import annotations

import logging
import sys
from pathlib import Path

import pytest

import evercommit.app_logging as al


def test_init_app_logging_creates_log_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    # Force app root to our temp path so we don't pollute the repo.
    monkeypatch.setattr(al, "find_app_root", lambda: tmp_path)
    monkeypatch.setattr(al, "LOGS_DIRNAME", "logs_test")
    al.shutdown_app_logging()

    orig_hook = sys.excepthook
    try:
        lp = al.init_app_logging(component="unit")
        assert lp is not None
        assert lp.exists()
        assert lp.parent.name == "logs_test"
        assert lp.name.startswith("unit_")
        assert al.current_log_path() == lp

        # second call is a no-op returning the same file
        assert al.init_app_logging(component="other") == lp

        logging.getLogger("evercommit.test").info("test log line")
    finally:
        sys.excepthook = orig_hook
        al.shutdown_app_logging()

    text = lp.read_text(encoding="utf-8")
    assert "=== evercommit" in text
    assert "test log line" in text
    assert al.current_log_path() is None


def test_level_from_env(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("EVERCOMMIT_LOG_LEVEL", "debug")
    assert al._level_from_env() == logging.DEBUG
    monkeypatch.setenv("EVERCOMMIT_LOG_LEVEL", "nonsense")
    assert al._level_from_env() == logging.INFO


def test_logs_dir_is_created_under_app_root(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(al, "find_app_root", lambda: tmp_path)
    d = al.logs_dir()
    assert d == tmp_path / "logs"
    assert d.is_dir()
