import numpy as np
import pytest
from pydantic import BaseModel
from ftl.errors import ChartError, UsageError
from ftl.sweeps import Sweep
from ftl.utils import (
    has_nan,
    output_path,
    parallel_map,
    read_csv,
    spawn_rngs,
    thread_cap,
    write_csv,
)


class SquareRow(BaseModel):
    x: float
    square: float


class SquareSweep(Sweep):
    RowCls = SquareRow
    max_chunk = 8
    header_notes = {"x": "input", "square": "x times x"}

    def evaluate(self, point):
        if point < 0:
            raise ChartError(f"no chart at {point}")
        return [SquareRow(x=point, square=point * point)]


def test_sweep_basic():
    result = SquareSweep(chunk=4).run(range(10))
    assert [row.square for row in result.rows] == [x * x for x in range(10)]
    assert result.meta.total_points == 10
    assert result.meta.chunks == 3
    assert result.meta.failed == 0
    assert type(result).__name__ == "SquareRowTable"


def test_sweep_skips_chart_failures(failures):
    sweep = SquareSweep(chunk=2, threads=1)
    result = sweep.run([1, -1, 2, -2, 3])
    assert [row.x for row in result.rows] == [1, 2, 3]
    assert result.meta.failed == 2
    assert result.meta.evaluated == 3
    assert len(sweep.failures) == 2
    assert failures.count == 2


def test_sweep_invalid_chunk():
    with pytest.raises(UsageError):
        SquareSweep(chunk=0)
    with pytest.raises(UsageError) as exc:
        SquareSweep(chunk=9)
    assert "invalid chunk size" in str(exc.value)


def test_sweep_needs_points():
    with pytest.raises(UsageError):
        SquareSweep().run([])


def test_sweep_writes_documented_csv(tmp_path):
    sweep = SquareSweep(chunk=8)
    path = sweep.write(tmp_path / "squares.csv", sweep.run([1.5, 2.0]))
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# x: input", "# square: x times x"]
    assert lines[2] == "x,square"
    rows = read_csv(path)
    assert list(rows[0]) == ["x", "square"]
    assert rows == [{"x": "1.5", "square": "2.25"}, {"x": "2", "square": "4"}]


def test_floats_written_round_trip(tmp_path):
    path = write_csv(
        tmp_path / "tenths.csv",
        [SquareRow(x=np.float64(0.1), square=0.1 * 0.1)],
        {},
    )
    (row,) = read_csv(path)
    assert row["x"] == "0.10000000000000001"
    assert float(row["square"]) == 0.1 * 0.1


def test_empty_table_refused(tmp_path):
    with pytest.raises(UsageError):
        write_csv(tmp_path / "empty.csv", [], {})


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("FTL_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("FTL_THREADS", "0")
    assert thread_cap() == 1
    monkeypatch.setenv("FTL_THREADS", "many")
    with pytest.raises(UsageError):
        thread_cap()


def test_parallel_map_keeps_order():
    items = list(range(50))
    assert parallel_map(lambda x: -x, items, threads=4) == [-x for x in items]


def test_spawned_streams():
    first = spawn_rngs(5, ["a", "b"])
    second = spawn_rngs(5, ["a", "b"])
    assert first["a"].random() == second["a"].random()
    rngs = spawn_rngs(5, ["a", "b"])
    assert rngs["a"].random() != rngs["b"].random()


def test_output_path(tmp_path):
    path = output_path(tmp_path / "out", "typemap", "egg-m2", "Summary", suffix=".json")
    assert path.name == "typemap-egg-m2-summary.json"
    assert path.parent.is_dir()


def test_has_nan():
    assert has_nan([SquareRow(x=1, square=np.nan)])
    assert not has_nan([SquareRow(x=1, square=1)])
    assert has_nan({"values": {"A": 1.0, "t": float("nan")}})
    assert has_nan([[1.0, complex(0, np.nan)]])
    assert has_nan(np.array([1.0, np.nan]))
    assert not has_nan({"rows": [SquareRow(x=1, square=1)], "note": None})
