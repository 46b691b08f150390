import numpy as np
import pytest

from simplexfit.errors import DataError
from simplexfit.tools.data import Dataset, load_dataset, write_dataset


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoad:
    def test_reads_columns(self, tmp_path):
        path = _write(tmp_path, "y,x\n0.2,1\n0.5, 2.5\n0.9,-3\n")
        data = load_dataset(path, "y")
        assert data.n == 3
        assert data.names == ["y", "x"]
        np.testing.assert_allclose(data.y, [0.2, 0.5, 0.9])
        np.testing.assert_allclose(data.columns["x"], [1.0, 2.5, -3.0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_dataset(tmp_path / "absent.csv", "y")

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataError, match="no header row"):
            load_dataset(_write(tmp_path, ""), "y")

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_dataset(_write(tmp_path, "y,x\n"), "y")

    def test_non_numeric_cell(self, tmp_path):
        with pytest.raises(DataError) as info:
            load_dataset(_write(tmp_path, "y,x\n0.2,1\n0.4,abc\n"), "y")
        message = str(info.value)
        assert "'abc'" in message and "row 2" in message and "line 3" in message and "'x'" in message

    def test_missing_value(self, tmp_path):
        with pytest.raises(DataError, match="missing value in row 1"):
            load_dataset(_write(tmp_path, "y,x\n0.2,NA\n0.4,1\n"), "y")

    @pytest.mark.parametrize("bad", ["0", "1", "1.2", "-0.1"])
    def test_response_outside_unit_interval(self, tmp_path, bad):
        with pytest.raises(DataError, match="rows 2"):
            load_dataset(_write(tmp_path, f"y,x\n0.2,1\n{bad},2\n"), "y")

    def test_missing_response_column(self, tmp_path):
        with pytest.raises(DataError, match="'accuracy'"):
            load_dataset(_write(tmp_path, "y,x\n0.2,1\n0.4,2\n"), "accuracy")


class TestWrite:
    def test_written_file_loads_back(self, tmp_path, linear_data):
        path = write_dataset(linear_data, tmp_path / "out" / "linear.csv")
        loaded = load_dataset(path, "y")
        assert loaded.names == linear_data.names
        np.testing.assert_allclose(loaded.y, linear_data.y, rtol=1e-9)


class TestDataset:
    @pytest.fixture
    def data(self):
        return Dataset.from_arrays({"y": [0.1, 0.2, 0.3, 0.4], "x": [1.0, 2.0, 3.0, 4.0]}, "y")

    def test_drop(self, data):
        reduced = data.drop([0, 2])
        np.testing.assert_array_equal(reduced.y, [0.2, 0.4])
        np.testing.assert_array_equal(reduced.columns["x"], [2.0, 4.0])
        assert data.n == 4

    def test_drop_out_of_range(self, data):
        with pytest.raises(DataError, match=r"\[5\]"):
            data.drop([4])

    def test_with_response(self, data):
        other = data.with_response([0.5, 0.6, 0.7, 0.8])
        np.testing.assert_array_equal(other.y, [0.5, 0.6, 0.7, 0.8])
        np.testing.assert_array_equal(data.y, [0.1, 0.2, 0.3, 0.4])

    def test_with_invalid_response(self, data):
        with pytest.raises(DataError):
            data.with_response([0.5, 0.6, 1.0, 0.8])

    def test_single_row(self):
        with pytest.raises(DataError):
            Dataset.from_arrays({"y": [0.5]}, "y")
