"""Session service: JSONL logs, websocket endpoint, replay, CLI."""

from .log import LogWriter, SessionLog, config_hash, dumps, header_line, tick_line
from .replay import ReplayResult, replay, trajectory_from_log
from .server import create_app
from .session import Session, SessionConfig, build_summary, default_log_dir

__all__ = [
    "LogWriter",
    "SessionLog",
    "config_hash",
    "dumps",
    "header_line",
    "tick_line",
    "ReplayResult",
    "replay",
    "trajectory_from_log",
    "create_app",
    "Session",
    "SessionConfig",
    "build_summary",
    "default_log_dir",
]
