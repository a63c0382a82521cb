"""CSV and JSON serialization with atomic writes.

All matrices are CSV with one header row (columns = ROIs, regressors, or
motion parameters; rows = timepoints). Floats are written with 17
significant digits so a write/read round trip is exact. Writes go to a
temporary file in the same directory and are renamed into place, so a
failed run never leaves a partial file. JSON uses sorted keys and a fixed
indent; nothing embeds timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .errors import FileFormatError
from .metrics import Parcellation
from .pipelines import HMP_PARAM_LABELS, HeadMotion

__all__ = [
    "format_float",
    "atomic_write_text",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_motion_csv",
    "read_motion_csv",
    "write_parcellation_csv",
    "read_parcellation_csv",
    "write_json",
    "read_json",
]

PARCELLATION_HEADER = ("roi", "x_mm", "y_mm", "z_mm")


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(rows) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _read_rows(path: Path) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.reader(fh))
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e


def write_matrix_csv(path: Path, values: np.ndarray, labels) -> None:
    values = np.asarray(values, dtype=float)
    labels = list(labels)
    if values.ndim != 2 or values.shape[1] != len(labels):
        raise FileFormatError(
            f"matrix shape {values.shape} does not match {len(labels)} labels"
        )
    rows = [labels]
    rows.extend([format_float(v) for v in row] for row in values)
    atomic_write_text(path, _csv_text(rows))


def read_matrix_csv(path: Path) -> tuple[np.ndarray, tuple[str, ...]]:
    """Parse a header-plus-floats CSV; empty rows mean a zero-column matrix."""
    rows = _read_rows(path)
    if not rows and Path(path).stat().st_size == 0:
        raise FileFormatError(f"{path}: empty file")
    if not rows:
        raise FileFormatError(f"{path}: missing header row")
    header = tuple(rows[0])
    width = len(header)
    data = np.zeros((len(rows) - 1, width))
    for i, row in enumerate(rows[1:]):
        if len(row) != width:
            raise FileFormatError(
                f"{path}: row {i + 2} has {len(row)} fields, header has {width}"
            )
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError as e:
                raise FileFormatError(f"{path}: row {i + 2}, column {j + 1}: {e}") from e
    if not np.all(np.isfinite(data)):
        raise FileFormatError(f"{path}: contains non-finite values")
    return data, header


def write_motion_csv(path: Path, motion: HeadMotion) -> None:
    write_matrix_csv(path, motion.values, HMP_PARAM_LABELS)


def read_motion_csv(path: Path) -> HeadMotion:
    values, header = read_matrix_csv(path)
    if header != HMP_PARAM_LABELS:
        raise FileFormatError(
            f"{path}: motion header must be {','.join(HMP_PARAM_LABELS)}, "
            f"got {','.join(header)}"
        )
    try:
        return HeadMotion(values)
    except Exception as e:
        raise FileFormatError(f"{path}: {e}") from e


def write_parcellation_csv(path: Path, parc: Parcellation) -> None:
    rows = [list(PARCELLATION_HEADER)]
    for label, (x, y, z) in zip(parc.roi_labels, parc.centroids):
        rows.append([label, format_float(x), format_float(y), format_float(z)])
    atomic_write_text(path, _csv_text(rows))


def read_parcellation_csv(path: Path) -> Parcellation:
    rows = _read_rows(path)
    if not rows or tuple(rows[0]) != PARCELLATION_HEADER:
        raise FileFormatError(
            f"{path}: parcellation header must be {','.join(PARCELLATION_HEADER)}"
        )
    labels = []
    coords = []
    for i, row in enumerate(rows[1:]):
        if len(row) != 4:
            raise FileFormatError(f"{path}: row {i + 2} has {len(row)} fields, expected 4")
        labels.append(row[0])
        try:
            coords.append([float(c) for c in row[1:]])
        except ValueError as e:
            raise FileFormatError(f"{path}: row {i + 2}: {e}") from e
    try:
        return Parcellation(tuple(labels), np.array(coords))
    except Exception as e:
        raise FileFormatError(f"{path}: {e}") from e


def write_json(path: Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: Path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path}: invalid JSON: {e}") from e
