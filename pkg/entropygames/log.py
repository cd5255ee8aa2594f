import logging
import os
import sys
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any, Callable, Dict, Generator, List, Tuple

log = logging.getLogger("entropygames")

# Environment variable that controls verbosity on stderr
LOG_ENV_VAR: str = "ENTROPY_GAMES_LOG"

_LEVELS: Dict[str, int] = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "quiet": logging.ERROR,
}

# Context instance that stores the running command and the name of its
# input file, in that order
_CTX_RUN: ContextVar[Tuple[str, str]] = ContextVar(f"{__name__}:run")


def _setup_log_record_factory() -> None:
    """
    Adds a log record factory that prefixes messages from this package with
    the command and input that are currently running.
    """
    old_factory: Callable[..., logging.LogRecord] = logging.getLogRecordFactory()

    def new_factory(*args: Any, **kwargs: Any) -> logging.LogRecord:
        record = old_factory(*args, **kwargs)
        if record.name.startswith(log.name):
            parts: List[str] = []
            if (run := _CTX_RUN.get(None)) is not None:
                parts.append(f"[{run[0]}/{run[1]}]")
            parts.append(str(record.msg))
            record.msg = " ".join(parts)
        return record

    logging.setLogRecordFactory(new_factory)


_setup_log_record_factory()


@contextmanager
def run_context(command: str, source: str) -> Generator[None, None, None]:
    """
    Tags every log message emitted inside the block with the command and
    input source. The previous context is restored on exit.

    Args:
        command: The command being run.
        source: A short name of the input being processed.
    """
    token = _CTX_RUN.set((command, source))
    try:
        yield
    finally:
        _CTX_RUN.reset(token)


def log_level_name() -> str:
    """
    The verbosity requested through the environment, one of "debug",
    "info" or "quiet". Unknown values fall back to "info".
    """
    name = os.environ.get(LOG_ENV_VAR, "info").strip().lower()
    return name if name in _LEVELS else "info"


def configure_logging() -> str:
    """
    Attaches a stderr handler to the package logger at the level named by
    the ENTROPY_GAMES_LOG environment variable.

    Returns:
        The level name that was applied.
    """
    name = log_level_name()
    if not any(getattr(h, "_entropygames", False) for h in log.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        handler._entropygames = True  # type: ignore[attr-defined]
        log.addHandler(handler)
    log.setLevel(_LEVELS[name])
    return name
