"""Matrix files: JSON ``{"rows", "cols", "re", "im"}`` (row-major) or real CSV."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InputError, SingcovError

__all__ = ["MatrixIOError", "read_matrix", "write_matrix", "matrix_to_json", "matrix_from_json", "atomic_write"]


class MatrixIOError(SingcovError, OSError):
    """Reading or writing a file failed."""


def matrix_to_json(a: ArrayLike) -> dict:
    arr = np.asarray(a)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError("only vectors and matrices can be serialized")
    arr = arr.astype(np.complex128)
    return {
        "rows": int(arr.shape[0]),
        "cols": int(arr.shape[1]),
        "re": arr.real.ravel().tolist(),
        "im": arr.imag.ravel().tolist(),
    }


def matrix_from_json(obj) -> NDArray[np.complex128]:
    if not isinstance(obj, dict):
        raise InputError("matrix JSON must be an object")
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed matrix JSON: {exc}") from exc
    im = np.asarray(obj.get("im", np.zeros(re.size)), dtype=np.float64)
    if rows < 0 or cols < 0 or re.ndim != 1 or im.ndim != 1:
        raise InputError("malformed matrix JSON")
    if re.size != rows * cols or im.size != rows * cols:
        raise InputError(f"matrix JSON has {re.size}/{im.size} entries, expected {rows * cols}")
    out = (re + 1j * im).reshape(rows, cols)
    if not np.all(np.isfinite(out)):
        raise InputError("matrix has non-finite entries")
    return out


def read_matrix(path: str | os.PathLike) -> NDArray[np.complex128]:
    """Load a ``.json`` complex matrix or a real CSV (one matrix row per line)."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise MatrixIOError(f"cannot read {p}: {exc.strerror or exc}") from exc
    if p.suffix.lower() == ".csv":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        try:
            arr = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
        except ValueError as exc:
            raise InputError(f"{p}: non-numeric CSV entry ({exc})") from exc
        if arr.ndim != 2:
            raise InputError(f"{p}: CSV rows have unequal lengths")
        return arr.astype(np.complex128)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON ({exc.msg})") from exc
    try:
        return matrix_from_json(obj)
    except InputError as exc:
        raise InputError(f"{p}: {exc}") from exc


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    p = Path(path)
    tmp = None
    try:
        fd, tmp = tempfile.mkstemp(dir=p.parent if str(p.parent) else ".", prefix=f".{p.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, p)
    except OSError as exc:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)
        raise MatrixIOError(f"cannot write {p}: {exc.strerror or exc}") from exc


def write_matrix(path: str | os.PathLike, a: ArrayLike) -> None:
    atomic_write(path, json.dumps(matrix_to_json(a)))
