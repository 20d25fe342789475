import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Sequence, TypeVar
import numpy as np
from pydantic import BaseModel
from slugify import slugify
from .errors import UsageError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def thread_cap() -> int:
    raw = os.environ.get("FTL_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"FTL_THREADS must be an integer, got {raw!r}")


def parallel_map(
    fn: Callable[[T], R], items: Sequence[T], threads: int = None
) -> List[R]:
    """map preserving input order; runs inline when only one thread is allowed"""
    threads = thread_cap() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_rngs(seed: int, names: Iterable[str]) -> Dict[str, np.random.Generator]:
    """one independent stream per named consumer, all derived from a single seed"""
    names = list(names)
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


def output_path(out_dir, *parts: str, suffix: str) -> Path:
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory / (slugify("-".join(str(p) for p in parts)) + suffix)


def _cell(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return value


def write_csv(path: Path, rows: List[BaseModel], notes: Dict[str, str]) -> Path:
    """
    Write pydantic rows as CSV. Every column gets a '# name: description'
    header line taken from notes (falling back to the field title).
    """
    if not rows:
        raise UsageError(f"refusing to write an empty table to {path}")
    if has_nan(rows):
        logger.warning("table %s contains NaN values", path)
    fields = list(rows[0].__fields__)
    with open(path, "w", newline="") as f:
        for name in fields:
            title = rows[0].__fields__[name].field_info.title or name
            f.write(f"# {name}: {notes.get(name, title)}\n")
        writer = csv.writer(f)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_cell(getattr(row, name)) for name in fields])
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def read_csv(path: Path) -> List[Dict[str, str]]:
    with open(path) as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path: Path, model: BaseModel, *, exclude=None) -> Path:
    with open(path, "w") as f:
        f.write(model.json(indent=2, exclude=exclude))
        f.write("\n")
    logger.info("wrote %s", path)
    return path


def has_nan(value) -> bool:
    """True if a NaN hides anywhere in a row, table, mapping or number"""
    if isinstance(value, BaseModel):
        return has_nan(value.dict())
    if isinstance(value, dict):
        return any(has_nan(v) for v in value.values())
    if isinstance(value, (list, tuple)):
        return any(has_nan(v) for v in value)
    if isinstance(value, np.ndarray):
        return value.dtype.kind in "fc" and bool(np.isnan(value).any())
    if isinstance(value, (complex, np.complexfloating)):
        return math.isnan(value.real) or math.isnan(value.imag)
    if isinstance(value, (float, np.floating)):
        return math.isnan(value)
    return False
