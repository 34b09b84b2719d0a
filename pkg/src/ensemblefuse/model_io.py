"""Reading, validating, and writing prediction/label matrices.

The interchange format is deliberately minimal: UTF-8 CSV with a mandatory
header row of class names, comma separators, decimal-point floats, and no
quoting (commas are forbidden inside class names). Floats are written with
17 significant digits so that write -> read round-trips doubles exactly.
Class order comes from the header and is authoritative; a permuted header is
an error, never silently reordered.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ensemblefuse.errors import ValidationError


@dataclass(frozen=True)
class ClassList:
    """Ordered, unique class names; order is significant end-to-end."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise ValidationError("class list is empty")
        seen: set[str] = set()
        for name in names:
            if not name:
                raise ValidationError("class names must be non-empty")
            if "," in name:
                raise ValidationError(f"class name {name!r} contains a comma (forbidden)")
            if "\n" in name or "\r" in name:
                raise ValidationError(f"class name {name!r} contains a line break (forbidden)")
            if name in seen:
                raise ValidationError(f"duplicate class name {name!r}")
            seen.add(name)

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(
                f"unknown class {name!r}; available: {', '.join(self.names)}"
            ) from None


def _as_matrix(values, n_classes: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got {arr.ndim}-D")
    if arr.shape[0] < 1:
        raise ValidationError("no samples")
    if arr.shape[1] != n_classes:
        raise ValidationError(
            f"matrix has {arr.shape[1]} columns but the class list has {n_classes}"
        )
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PredictionMatrix:
    """N x C matrix of per-class probabilities, one row per sample."""

    classes: ClassList
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_matrix(self.values, len(self.classes))
        if not np.all(np.isfinite(arr)):
            raise ValidationError("prediction matrix contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            bad = np.argwhere((arr < 0.0) | (arr > 1.0))[0]
            raise ValidationError(
                f"row {bad[0] + 1}, class {self.classes.names[bad[1]]!r}: "
                f"value {arr[bad[0], bad[1]]!r} outside [0, 1]"
            )
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelMatrix:
    """N x C matrix of binary ground-truth labels."""

    classes: ClassList
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_matrix(self.values, len(self.classes))
        if not np.all((arr == 0.0) | (arr == 1.0)):
            bad = np.argwhere((arr != 0.0) & (arr != 1.0))[0]
            raise ValidationError(
                f"row {bad[0] + 1}, class {self.classes.names[bad[1]]!r}: "
                f"label {arr[bad[0], bad[1]]!r} is not 0 or 1"
            )
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]


def _read_rows(path) -> tuple[ClassList, list[list[str]]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    lines = text.splitlines()
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ValidationError(f"{path}: empty file (missing header)")
    classes = ClassList(tuple(field.strip() for field in lines[0].split(",")))
    rows = [line.split(",") for line in lines[1:]]
    if not rows:
        raise ValidationError(f"{path}: no samples")
    return classes, rows


def _parse_matrix(path, rows: list[list[str]], classes: ClassList, parse_field) -> np.ndarray:
    c = len(classes)
    out = np.empty((len(rows), c), dtype=np.float64)
    for i, row in enumerate(rows, start=1):
        if len(row) != c:
            raise ValidationError(f"{path}: row {i}: expected {c} fields, got {len(row)}")
        for j, field in enumerate(row):
            out[i - 1, j] = parse_field(path, i, classes.names[j], field.strip())
    return out


def _parse_probability(path, row: int, class_name: str, field: str) -> float:
    try:
        value = float(field)
    except ValueError:
        raise ValidationError(
            f"{path}: row {row}, class {class_name!r}: non-numeric field {field!r}"
        ) from None
    if not np.isfinite(value):
        raise ValidationError(f"{path}: row {row}, class {class_name!r}: non-finite value {field!r}")
    if value < 0.0 or value > 1.0:
        raise ValidationError(
            f"{path}: row {row}, class {class_name!r}: value {value!r} outside [0, 1]"
        )
    return value


def _parse_binary(path, row: int, class_name: str, field: str) -> float:
    if field == "0":
        return 0.0
    if field == "1":
        return 1.0
    raise ValidationError(
        f"{path}: row {row}, class {class_name!r}: label {field!r} is not 0 or 1"
    )


def read_predictions(path) -> PredictionMatrix:
    """Read a probability CSV; row order is preserved."""
    classes, rows = _read_rows(path)
    values = _parse_matrix(path, rows, classes, _parse_probability)
    return PredictionMatrix(classes, values)


def read_labels(path) -> LabelMatrix:
    """Read a binary label CSV; fields must be literally ``0`` or ``1``."""
    classes, rows = _read_rows(path)
    values = _parse_matrix(path, rows, classes, _parse_binary)
    return LabelMatrix(classes, values)


def _format_row(row: np.ndarray) -> str:
    return ",".join(format(v, ".17g") for v in row)


def _write_csv(classes: ClassList, values: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(classes.names))
        fh.write("\n")
        for row in values:
            fh.write(_format_row(row))
            fh.write("\n")


def write_predictions(m: PredictionMatrix, path) -> None:
    """Write a probability CSV that round-trips through read_predictions exactly."""
    _write_csv(m.classes, m.values, path)


def write_labels(m: LabelMatrix, path) -> None:
    """Write a label CSV (fields serialize as bare ``0``/``1``)."""
    _write_csv(m.classes, m.values, path)


def align(
    preds: Sequence[PredictionMatrix], labels: LabelMatrix
) -> tuple[list[PredictionMatrix], LabelMatrix]:
    """Confirm identical sample counts and class lists across all inputs.

    Returns the validated collection unchanged. A same-set/different-order
    class list is reported with the permutation that would fix it, because a
    silently permuted ensemble is the classic hard-to-spot bug.
    """
    preds = list(preds)
    if not preds:
        raise ValidationError("need at least one prediction matrix")
    ref_classes = labels.classes
    ref_n = labels.n_samples
    for k, m in enumerate(preds, start=1):
        if m.classes != ref_classes:
            if set(m.classes.names) == set(ref_classes.names):
                perm = [m.classes.names.index(name) for name in ref_classes.names]
                raise ValidationError(
                    f"matrix {k}: class order differs from the labels; "
                    f"reorder its columns as {perm} to match {list(ref_classes.names)}"
                )
            raise ValidationError(
                f"matrix {k}: class list {list(m.classes.names)} does not match "
                f"labels {list(ref_classes.names)}"
            )
        if m.n_samples != ref_n:
            raise ValidationError(
                f"matrix {k}: {m.n_samples} samples, expected {ref_n} (from labels)"
            )
    return preds, labels
