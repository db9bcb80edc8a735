"""Opt-in per-run log files for the CLI.

Library modules only ever call ``logging.getLogger(__name__)``. Handlers are
attached here, once per process, when a command asks for a log file.
"""

from __future__ import annotations

import logging
import os
import sys
import traceback
from datetime import datetime
from pathlib import Path
from types import TracebackType
from typing import Any, Optional

from .constants import ENV_LOG_LEVEL, ENV_LOG_TO_CONSOLE, LOGS_DIRNAME
from .util import env_bool, find_app_root

_LOG = logging.getLogger("evercommit")

_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

# Handlers and the log path of the current run; empty until init_app_logging succeeds.
_state: dict[str, Any] = {}


def _level_from_env() -> int:
    name = str(os.environ.get(ENV_LOG_LEVEL) or "INFO").strip().upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def logs_dir() -> Optional[Path]:
    """Return ``<app root>/logs``, creating it if needed; None when it cannot be created."""
    try:
        d = find_app_root() / LOGS_DIRNAME
        d.mkdir(parents=True, exist_ok=True)
        return d
    except OSError:
        return None


def _log_uncaught(exc_type: type[BaseException], exc: BaseException, tb: TracebackType | None) -> None:
    try:
        _LOG.error("Uncaught exception:\n%s", "".join(traceback.format_exception(exc_type, exc, tb)))
    finally:
        sys.__excepthook__(exc_type, exc, tb)


def init_app_logging(component: str = "cli") -> Optional[Path]:
    """Start writing ``logs/<component>_<timestamp>.log`` for this process.

    Attaches a FileHandler to the root logger at the level named by
    EVERCOMMIT_LOG_LEVEL, mirrors records to stderr when EVERCOMMIT_LOG_TO_CONSOLE
    is truthy (stdout is reserved for JSON) and logs uncaught exceptions.

    A second call returns the path of the first. Returns None if the file
    could not be opened; a command never fails because logging did.
    """
    if "path" in _state:
        return _state["path"]

    d = logs_dir()
    if d is None:
        return None
    path = d / f"{component}_{datetime.now().strftime('%Y-%m-%d_%H-%M-%S')}.log"
    try:
        fh = logging.FileHandler(path, encoding="utf-8")
    except OSError:
        return None

    level = _level_from_env()
    fmt = logging.Formatter(_FORMAT)
    handlers: list[logging.Handler] = [fh]
    if env_bool(ENV_LOG_TO_CONSOLE):
        handlers.append(logging.StreamHandler(sys.stderr))

    root = logging.getLogger()
    root.setLevel(level)
    for h in handlers:
        h.setLevel(level)
        h.setFormatter(fmt)
        root.addHandler(h)
    sys.excepthook = _log_uncaught

    _state.update(path=path, handlers=handlers)

    from . import __version__

    _LOG.info("=== evercommit %s (%s) ===", __version__, component)
    _LOG.info("argv=%s", " ".join(sys.argv[1:]))
    _LOG.info("cwd=%s python=%s", Path.cwd(), sys.version.split()[0])
    return path


def shutdown_app_logging() -> None:
    """Detach and close the handlers of the current run (tests, repeated CLI calls in one process)."""
    root = logging.getLogger()
    for h in _state.get("handlers", ()):
        root.removeHandler(h)
        h.close()
    _state.clear()


def current_log_path() -> Optional[Path]:
    return _state.get("path")
