"""
Matrix files.

Two formats are written:

* CSV, one matrix row per line, every entry written as ``re+imj`` (the sign
  of the imaginary part is always present, so ``complex()`` reads it back);
* a JSON envelope ``{"rows", "cols", "format", "data"}`` where ``data`` holds
  ``[re, im]`` pairs. Band matrices keep their diagonal storage in JSON
  (``format == "band"`` plus ``d``); in CSV they are written densely.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from common.errors import InvalidArgumentError
from structures.matrices import BandMatrix, DenseMatrix


logger = logging.getLogger(__name__)

MatrixLike = Union[DenseMatrix, BandMatrix]
FORMATS = ("csv", "json")


def format_complex(value) -> str:
    """``re+imj`` using the shortest round-tripping repr of each part."""
    value = complex(value)
    imag = repr(value.imag)
    sign = "" if imag.startswith("-") else "+"
    return f"{value.real!r}{sign}{imag}j"


def parse_complex(text: str) -> complex:
    """Inverse of ``format_complex``; also accepts plain reals like ``-2``."""
    try:
        value = complex(str(text).strip().replace(" ", ""))
    except ValueError as e:
        raise InvalidArgumentError(f"not a complex number in re+imj form: {text!r}") from e
    if not np.isfinite(value):
        raise InvalidArgumentError(f"complex value must be finite, got {text!r}")
    return value


def _dense(m: MatrixLike) -> DenseMatrix:
    if isinstance(m, BandMatrix):
        return m.to_dense()
    m = np.asarray(m)
    if m.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def _pairs(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.ravel(values)]


def _from_pairs(pairs, shape) -> np.ndarray:
    flat = np.asarray(pairs, dtype=float)
    if flat.ndim != 2 or flat.shape[1] != 2 or flat.shape[0] != int(np.prod(shape)):
        raise InvalidArgumentError(f"expected {int(np.prod(shape))} [re, im] pairs for shape {shape}")
    return (flat[:, 0] + 1j * flat[:, 1]).reshape(shape)


def write_matrix_csv(path, m: MatrixLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dense = _dense(m)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        for row in dense:
            writer.writerow([format_complex(z) for z in row])
    logger.debug(f"Wrote {dense.shape[0]}x{dense.shape[1]} matrix to {path}")
    return path


def read_matrix_csv(path) -> DenseMatrix:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Matrix file not found: {path}")
    with open(path, 'r', newline='', encoding='utf-8') as f:
        rows = [[parse_complex(cell) for cell in row] for row in csv.reader(f) if row]
    if not rows:
        raise InvalidArgumentError(f"empty matrix file: {path}")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise InvalidArgumentError(f"ragged rows in matrix file: {path}")
    return np.array(rows, dtype=np.complex128)


def matrix_to_json(m: MatrixLike) -> Dict[str, Any]:
    if isinstance(m, BandMatrix):
        return {
            "rows": m.n,
            "cols": m.n,
            "format": "band",
            "d": m.d,
            "data": _pairs(m.data),
        }
    dense = _dense(m)
    return {
        "rows": int(dense.shape[0]),
        "cols": int(dense.shape[1]),
        "format": "dense",
        "data": _pairs(dense),
    }


def matrix_from_json(doc: Dict[str, Any]) -> MatrixLike:
    try:
        rows, cols, kind, data = doc["rows"], doc["cols"], doc["format"], doc["data"]
    except (KeyError, TypeError) as e:
        raise InvalidArgumentError(f"matrix envelope is missing a field: {e}") from e
    if kind == "dense":
        return _from_pairs(data, (rows, cols)).astype(np.complex128)
    if kind == "band":
        d = doc.get("d")
        if d is None or rows != cols:
            raise InvalidArgumentError("band envelope needs a square shape and a 'd' field")
        return BandMatrix(n=rows, d=d, data=_from_pairs(data, (2 * d + 1, rows)))
    raise InvalidArgumentError(f"unknown matrix format {kind!r}")


def write_matrix_json(path, m: MatrixLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(matrix_to_json(m), f)
    logger.debug(f"Wrote matrix envelope to {path}")
    return path


def read_matrix_json(path) -> MatrixLike:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Matrix file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"Malformed matrix file {path}: {e}") from e
    return matrix_from_json(doc)


def write_matrix(path, m: MatrixLike, fmt: str = "csv") -> Path:
    if fmt == "csv":
        return write_matrix_csv(path, m)
    if fmt == "json":
        return write_matrix_json(path, m)
    raise InvalidArgumentError(f"format must be one of {FORMATS}, got {fmt!r}")


def read_matrix(path) -> MatrixLike:
    """Read either format, chosen by file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        return read_matrix_json(path)
    if suffix == ".csv":
        return read_matrix_csv(path)
    raise InvalidArgumentError(f"cannot infer the matrix format of {path}")
