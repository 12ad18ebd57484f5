"""File output helpers: directory creation, CSV and text writers with retry."""

import csv
import functools
import os
import time
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union

from utils.logging_config import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def retry(max_attempts: int = 3, delay: float = 1.0, backoff: float = 2.0, exceptions: tuple = (Exception,)):
    """
    Retry decorator for transient failures.

    Args:
        max_attempts: Maximum number of attempts
        delay: Initial delay between attempts in seconds
        backoff: Backoff multiplier for delay
        exceptions: Tuple of exceptions to catch and retry
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            current_delay = delay
            last_exception = None

            for attempt in range(max_attempts):
                try:
                    return func(*args, **kwargs)
                except exceptions as e:
                    last_exception = e
                    if attempt < max_attempts - 1:
                        logger.warning(f"Attempt {attempt + 1}/{max_attempts} failed for {func.__name__}: {e}. Retrying in {current_delay}s...")
                        time.sleep(current_delay)
                        current_delay *= backoff
                    else:
                        logger.error(f"All {max_attempts} attempts failed for {func.__name__}: {e}")

            raise last_exception
        return wrapper
    return decorator


def ensure_dir(path: PathLike) -> Path:
    """
    Create a directory (and parents) if missing.

    Args:
        path: Directory path

    Returns:
        The directory as a Path

    Raises:
        OSError: If the path exists and is not a directory, or cannot be created
    """
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def format_cell(value: Any) -> str:
    """
    Render one CSV cell: None as empty, floats with 9 significant digits.

    Args:
        value: Cell value

    Returns:
        Cell text
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write rows to a CSV file with LF line endings.

    The file is written to a temporary sibling and moved into place so a
    partially written CSV is never observed. Rows are materialized first so
    every retry writes all of them.

    Args:
        path: Destination file
        header: Column names
        rows: Row values, rendered with format_cell

    Returns:
        Path of the written file

    Raises:
        OSError: If the file cannot be written after retries
    """
    lines = [list(header)] + [[format_cell(value) for value in row] for row in rows]
    return _write_rows(Path(path), lines)


@retry(max_attempts=3, delay=0.1, backoff=2.0, exceptions=(PermissionError, BlockingIOError, InterruptedError))
def _write_rows(target: Path, lines: List[List[str]]) -> Path:
    tmp = target.with_name(target.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as f:
            csv.writer(f, lineterminator="\n").writerows(lines)
        os.replace(tmp, target)
    except OSError:
        tmp.unlink(missing_ok=True)
        raise
    return target


def read_csv(path: PathLike) -> List[dict]:
    """Read a CSV written by write_csv into a list of row dicts (string values)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


@retry(max_attempts=3, delay=0.1, backoff=2.0, exceptions=(PermissionError, BlockingIOError, InterruptedError))
def write_text(path: PathLike, content: str, encoding: Optional[str] = "utf-8") -> Path:
    """Write a text file with LF line endings."""
    target = Path(path)
    with open(target, "w", encoding=encoding, newline="\n") as f:
        f.write(content)
    return target
