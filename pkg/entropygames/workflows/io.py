import os
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, Generator, Union

import numpy as np

from entropygames.log import log

PathLike = Union[str, os.PathLike]

# Enough significant digits to round-trip any double
FLOAT_FORMAT: str = "%.17g"


@contextmanager
def _atomic_open(path: PathLike) -> Generator[IO[str], None, None]:
    """
    Opens a temporary file next to path for writing and moves it into place
    once the block exits cleanly. Readers never see a partial file.
    """
    target = Path(path)
    tmp = target.with_name(f".{target.name}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            yield f
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, target)
    finally:
        if tmp.exists():
            tmp.unlink()


def write_csv(path: PathLike, header: str, rows: np.ndarray) -> Path:
    """
    Writes a 2-d array as comma-separated values with a single header line
    and every number at full double precision.

    Returns:
        The path that was written.
    """
    with _atomic_open(path) as f:
        np.savetxt(
            f,
            np.atleast_2d(rows),
            fmt=FLOAT_FORMAT,
            delimiter=",",
            header=header,
            comments="",
        )
    log.info(f"Wrote {path}")
    return Path(path)


def write_json(path: PathLike, report: Any) -> Path:
    """
    Writes a dataclasses-json model, pretty-printed with sorted keys.

    Returns:
        The path that was written.
    """
    with _atomic_open(path) as f:
        f.write(report.to_json(indent=2, sort_keys=True))
        f.write("\n")
    log.info(f"Wrote {path}")
    return Path(path)
