import logging
import math
from functools import lru_cache
from typing import List
from pydantic import BaseModel, Field, create_model
from .errors import ChartError, UsageError, ZeroDenominatorError
from .utils import parallel_map, write_csv

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def table_model(RowCls):
    return create_model(
        f"{RowCls.__name__}Table",
        rows=(List[RowCls], ...),
        meta=(SweepMeta, ...),
    )


class SweepMeta(BaseModel):
    total_points: int = Field(..., example=729)
    evaluated: int = Field(..., example=727)
    failed: int = Field(..., example=2)
    chunk_size: int = Field(..., example=64)
    chunks: int = Field(..., example=12)


class Sweep:
    """
    Base class for per-point sweeps that end up as CSV tables.

    Must set the following properties on subclasses:
        - RowCls - the pydantic model for one output row
        - header_notes - column name -> description, written as CSV header comments
        - max_chunk - largest number of points handed to one worker at a time

    and implement evaluate(point), returning a list of RowCls (a point may
    produce several rows, e.g. one per region family).

    Points whose chart or rational evaluation fails are logged and skipped;
    every other exception propagates.
    """

    header_notes = {}
    max_chunk = 256

    def __init__(self, chunk: int = 64, threads: int = None):
        if chunk < 1 or chunk > self.max_chunk:
            raise UsageError(f"invalid chunk size, must be in [1, {self.max_chunk}]")
        self.chunk = chunk
        self.threads = threads
        self.failures: List[tuple] = []

    def table_model(self):
        return table_model(self.RowCls)

    def evaluate(self, point) -> list:
        raise NotImplementedError

    def _safe(self, point) -> list:
        try:
            return self.evaluate(point)
        except (ChartError, ZeroDenominatorError) as exc:
            logger.warning("skipping %s: %s", point, exc)
            self.failures.append((point, str(exc)))
            return []

    def _chunk(self, points) -> list:
        rows = []
        for point in points:
            rows.extend(self._safe(point))
        return rows

    def run(self, points):
        if not len(points):
            raise UsageError(f"{type(self).__name__}: nothing to sweep")
        points = list(points)
        chunks = [points[i : i + self.chunk] for i in range(0, len(points), self.chunk)]
        parts = parallel_map(self._chunk, chunks, self.threads)
        rows = [row for part in parts for row in part]
        meta = SweepMeta(
            total_points=len(points),
            evaluated=len(points) - len(self.failures),
            failed=len(self.failures),
            chunk_size=self.chunk,
            chunks=math.ceil(len(points) / self.chunk),
        )
        logger.info(
            "%s: %d rows from %d points (%d failed)",
            type(self).__name__,
            len(rows),
            meta.total_points,
            meta.failed,
        )
        return self.table_model()(rows=rows, meta=meta)

    def write(self, path, table):
        return write_csv(path, table.rows, self.header_notes)
