import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ensemblefuse.errors import ValidationError
from ensemblefuse.model_io import (
    ClassList,
    LabelMatrix,
    PredictionMatrix,
    align,
    read_labels,
    read_predictions,
    write_labels,
    write_predictions,
)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestReadPredictions:
    def test_basic_parse(self, tmp_path):
        path = _write(tmp_path, "p.csv", "A,B\n0.2,0.9\n")
        m = read_predictions(path)
        assert m.classes.names == ("A", "B")
        assert m.values.shape == (1, 2)
        np.testing.assert_array_equal(m.values, [[0.2, 0.9]])

    def test_out_of_range_names_row_and_class(self, tmp_path):
        path = _write(tmp_path, "p.csv", "A,B\n0.2,1.5\n")
        with pytest.raises(ValidationError, match=r"row 1.*'B'"):
            read_predictions(path)

    def test_arity_mismatch(self, tmp_path):
        path = _write(tmp_path, "p.csv", "A,B\n0.1,0.2,0.3\n")
        with pytest.raises(ValidationError, match="expected 2 fields, got 3"):
            read_predictions(path)

    def test_non_numeric_field(self, tmp_path):
        path = _write(tmp_path, "p.csv", "A,B\n0.1,zebra\n")
        with pytest.raises(ValidationError, match="non-numeric"):
            read_predictions(path)

    def test_non_finite_value(self, tmp_path):
        path = _write(tmp_path, "p.csv", "A,B\n0.1,nan\n")
        with pytest.raises(ValidationError, match="non-finite"):
            read_predictions(path)

    def test_duplicate_class_names(self, tmp_path):
        path = _write(tmp_path, "p.csv", "A,A\n0.1,0.2\n")
        with pytest.raises(ValidationError, match="duplicate class name"):
            read_predictions(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="cannot read"):
            read_predictions(tmp_path / "nope.csv")

    def test_empty_file(self, tmp_path):
        path = _write(tmp_path, "p.csv", "")
        with pytest.raises(ValidationError, match="empty file"):
            read_predictions(path)

    def test_crlf_accepted(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_bytes(b"A,B\r\n0.25,0.75\r\n")
        m = read_predictions(path)
        np.testing.assert_array_equal(m.values, [[0.25, 0.75]])

    def test_row_order_preserved(self, tmp_path):
        path = _write(tmp_path, "p.csv", "A\n0.1\n0.9\n0.5\n")
        np.testing.assert_array_equal(read_predictions(path).values[:, 0], [0.1, 0.9, 0.5])


class TestReadLabels:
    def test_basic_parse(self, tmp_path):
        path = _write(tmp_path, "y.csv", "A,B\n1,0\n")
        m = read_labels(path)
        np.testing.assert_array_equal(m.values, [[1.0, 0.0]])

    def test_non_binary_field(self, tmp_path):
        path = _write(tmp_path, "y.csv", "A,B\n0.5,0\n")
        with pytest.raises(ValidationError, match="not 0 or 1"):
            read_labels(path)

    def test_no_samples(self, tmp_path):
        path = _write(tmp_path, "y.csv", "A,B\n")
        with pytest.raises(ValidationError, match="no samples"):
            read_labels(path)


class TestMatrixTypes:
    def test_zero_row_matrix_rejected(self):
        with pytest.raises(ValidationError, match="no samples"):
            PredictionMatrix(ClassList(("A", "B")), np.empty((0, 2)))

    def test_prediction_range_checked(self):
        with pytest.raises(ValidationError, match="outside"):
            PredictionMatrix(ClassList(("A",)), np.array([[1.2]]))

    def test_label_binary_checked(self):
        with pytest.raises(ValidationError, match="not 0 or 1"):
            LabelMatrix(ClassList(("A",)), np.array([[0.5]]))

    def test_values_are_read_only(self):
        m = PredictionMatrix(ClassList(("A",)), np.array([[0.5]]))
        with pytest.raises(ValueError):
            m.values[0, 0] = 0.1

    def test_empty_class_list_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            ClassList(())

    def test_comma_in_class_name_rejected(self):
        with pytest.raises(ValidationError, match="comma"):
            ClassList(("a,b",))


class TestWriteRoundTrip:
    def test_write_then_read_equal(self, tmp_path):
        m = PredictionMatrix(
            ClassList(("A", "B")), np.array([[0.2, 0.9], [1 / 3, 1e-7]])
        )
        path = tmp_path / "out.csv"
        write_predictions(m, path)
        back = read_predictions(path)
        assert back.classes == m.classes
        np.testing.assert_array_equal(back.values, m.values)

    def test_seventeen_digit_value_survives(self, tmp_path):
        value = 0.3333333333333333
        m = PredictionMatrix(ClassList(("A",)), np.array([[value]]))
        path = tmp_path / "out.csv"
        write_predictions(m, path)
        assert read_predictions(path).values[0, 0] == value

    def test_lf_line_endings_on_write(self, tmp_path):
        m = PredictionMatrix(ClassList(("A",)), np.array([[0.5]]))
        path = tmp_path / "out.csv"
        write_predictions(m, path)
        assert b"\r" not in path.read_bytes()

    def test_labels_round_trip(self, tmp_path):
        m = LabelMatrix(ClassList(("A", "B")), np.array([[1.0, 0.0], [0.0, 1.0]]))
        path = tmp_path / "y.csv"
        write_labels(m, path)
        assert path.read_text().splitlines()[1] == "1,0"
        back = read_labels(path)
        np.testing.assert_array_equal(back.values, m.values)

    @given(n=st.integers(1, 6), c=st.integers(1, 4), data=st.data())
    def test_round_trip_property(self, tmp_path, n, c, data):
        values = np.array(
            data.draw(
                st.lists(
                    st.lists(
                        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
                        min_size=c,
                        max_size=c,
                    ),
                    min_size=n,
                    max_size=n,
                )
            )
        )
        m = PredictionMatrix(ClassList(tuple(f"c{i}" for i in range(c))), values)
        path = tmp_path / "rt.csv"
        write_predictions(m, path)
        back = read_predictions(path)
        assert np.array_equal(back.values, m.values)


class TestAlign:
    def _matrix(self, names, n, fill=0.5):
        return PredictionMatrix(ClassList(names), np.full((n, len(names)), fill))

    def _labels(self, names, n):
        return LabelMatrix(ClassList(names), np.zeros((n, len(names))))

    def test_accepts_matching(self):
        preds = [self._matrix(("A", "B", "C"), 5), self._matrix(("A", "B", "C"), 5, 0.2)]
        labels = self._labels(("A", "B", "C"), 5)
        out_preds, out_labels = align(preds, labels)
        assert out_preds == preds and out_labels is labels

    def test_order_mismatch_reports_permutation(self):
        preds = [self._matrix(("B", "A"), 2)]
        labels = self._labels(("A", "B"), 2)
        with pytest.raises(ValidationError, match=r"reorder.*\[1, 0\]"):
            align(preds, labels)

    def test_sample_count_mismatch(self):
        preds = [self._matrix(("A",), 5), self._matrix(("A",), 6)]
        labels = self._labels(("A",), 5)
        with pytest.raises(ValidationError, match="6 samples, expected 5"):
            align(preds, labels)

    def test_disjoint_classes(self):
        preds = [self._matrix(("X",), 2)]
        labels = self._labels(("A",), 2)
        with pytest.raises(ValidationError, match="does not match"):
            align(preds, labels)

    def test_requires_one_matrix(self):
        with pytest.raises(ValidationError, match="at least one"):
            align([], self._labels(("A",), 2))
