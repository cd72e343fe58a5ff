import numpy as np
import pytest

from qubbo.dataset import Dataset, read_dataset_rows
from qubbo.exceptions import DuplicateRowError, SchemaError


def test_append_and_contains():
    data = Dataset(3)
    data.append([[0, 0, 1], [1, 0, 1]], [0.5, -1.0], loop=0)
    assert len(data) == 2
    assert data.contains([0, 0, 1])
    assert not data.contains([1, 1, 1])
    np.testing.assert_array_equal(
        data.contains([[0, 0, 1], [1, 1, 1]]), [True, False]
    )
    assert data.min_y() == -1.0


def test_append_rejects_duplicates():
    data = Dataset(2)
    data.append([[0, 1]], [1.0], loop=0)
    with pytest.raises(DuplicateRowError):
        data.append([[0, 1]], [2.0], loop=1)
    with pytest.raises(DuplicateRowError):
        data.append([[1, 1], [1, 1]], [1.0, 2.0], loop=1)
    assert len(data) == 1  # failed appends leave the dataset untouched


def test_copy_is_independent():
    data = Dataset(2)
    data.append([[0, 1]], [1.0], loop=0)
    other = data.copy()
    other.append([[1, 0]], [2.0], loop=1)
    assert len(data) == 1 and len(other) == 2
    assert not data.contains([1, 0])


def test_csv_round_trip(tmp_path):
    data = Dataset(4)
    rng = np.random.default_rng(0)
    bits = np.unique(rng.integers(0, 2, size=(30, 4)), axis=0)
    data.append(bits, rng.normal(size=len(bits)), loop=0)
    path = tmp_path / "data.csv"
    data.to_csv(path)
    assert path.read_text().splitlines()[0] == "x1,x2,x3,x4,y,loop"
    loaded = Dataset.from_csv(path)
    np.testing.assert_array_equal(loaded.bits, data.bits)
    np.testing.assert_array_equal(loaded.y, data.y)  # repr round-trip: exact
    np.testing.assert_array_equal(loaded.loop, data.loop)


def test_from_csv_schema_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2,y\n0,1,0.5\n")
    with pytest.raises(SchemaError):
        Dataset.from_csv(path)
    path.write_text("x1,x2,y,loop\n0,2,0.5,0\n")
    with pytest.raises(SchemaError):
        Dataset.from_csv(path)
    path.write_text("x1,x2,y,loop\n0,1,abc,0\n")
    with pytest.raises(SchemaError):
        Dataset.from_csv(path)
    path.write_text("x1,x2,y,loop\n0,1,0.5,0\n0,1,0.5,1\n")
    with pytest.raises(DuplicateRowError):
        Dataset.from_csv(path)
    path.write_text("x1,x2,y,loop\n0,1,0.5,0\n")
    with pytest.raises(SchemaError):
        Dataset.from_csv(path, n_bits=3)


def test_read_rows_reports_without_failing_on_duplicates(tmp_path):
    path = tmp_path / "dup.csv"
    path.write_text("x1,x2,y,loop\n0,1,0.5,0\n0,1,0.7,1\n\n")
    header, rows = read_dataset_rows(path)
    assert header == ["x1", "x2", "y", "loop"]
    assert rows == [([0, 1], 0.5, 0), ([0, 1], 0.7, 1)]
