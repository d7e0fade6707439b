"""Reading user data and reports, writing tables and the run manifest.

Scalar and item data are CSV with header ``value,epsilon`` (an item cell
that is empty or ``null`` is the null item). Vector data are JSON lines
``{"x": [...], "epsilon": ...}``. Every float is written in shortest
round-trip form, so files reproduce the in-memory values exactly.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..core import InputError, PrivacyBudgets
from ..dist_learn import NULL_ITEM, SparseReports
from ..multidim_mech import DuchiReports
from ..scalar_mech import ScalarMechanism, ScalarReports


class Schema(str, enum.Enum):
    SCALAR = "scalar"
    VECTOR = "vector"
    ITEM = "item"


class DataError(InputError):
    """Malformed or out-of-domain data; ``row`` is 1-based, counting data rows."""

    def __init__(self, path, row: int | None, message: str):
        self.path = str(path)
        self.row = row
        where = f"{self.path}, row {row}" if row is not None else self.path
        super().__init__(f"{where}: {message}")


def fmt(x) -> str:
    return repr(float(x))


def _epsilon(path, row, text) -> float:
    try:
        eps = float(text)
    except (TypeError, ValueError):
        raise DataError(path, row, f"epsilon {text!r} is not a number") from None
    if not (math.isfinite(eps) and eps > 0):
        raise DataError(path, row, f"epsilon must be positive and finite, got {text!r}")
    return eps


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(path, None, f"cannot read file ({exc.strerror})") from None


def _csv_rows(path, header):
    reader = csv.reader(io.StringIO(_read_text(path)))
    first = next(reader, None)
    if first is None or [h.strip() for h in first] != list(header):
        raise DataError(path, None, f"expected header {','.join(header)!r}")
    rows = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(path, row_no, f"expected {len(header)} fields, got {len(row)}")
        rows.append((row_no, [c.strip() for c in row]))
    if not rows:
        raise DataError(path, None, "no data rows")
    return rows


def _scalar(path, r, d, binary):
    values, eps = [], []
    for row, (value, e) in _csv_rows(path, ("value", "epsilon")):
        try:
            v = float(value)
        except ValueError:
            raise DataError(path, row, f"value {value!r} is not a number") from None
        if binary and v not in (-1.0, 1.0):
            raise DataError(path, row, f"value {value!r} is not -1 or +1")
        if not abs(v) <= 1.0:
            raise DataError(path, row, f"value {value!r} lies outside [-1, 1]")
        values.append(v)
        eps.append(_epsilon(path, row, e))
    return np.array(values), PrivacyBudgets(eps)


def _items(path, r, d, binary):
    items, eps = [], []
    for row, (value, e) in _csv_rows(path, ("value", "epsilon")):
        if value in ("", "null"):
            item = NULL_ITEM
        else:
            try:
                item = int(value)
            except ValueError:
                raise DataError(path, row, f"item {value!r} is not an integer") from None
            if d is not None and not 0 <= item < d:
                raise DataError(path, row, f"item {item} outside [0, {d})")
            if item < 0:
                raise DataError(path, row, f"item {item} is negative")
        items.append(item)
        eps.append(_epsilon(path, row, e))
    return np.array(items, dtype=np.int64), PrivacyBudgets(eps)


def _jsonl(path):
    rows = []
    for row, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(path, row, f"invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise DataError(path, row, "expected a JSON object")
        rows.append((row, obj))
    if not rows:
        raise DataError(path, None, "no data rows")
    return rows


def _vector_rows(path, key):
    vecs, eps, dims = [], [], None
    for row, obj in _jsonl(path):
        extra = set(obj) - {key, "epsilon"}
        if extra:
            raise DataError(path, row, f"unexpected fields {sorted(extra)}")
        x = obj.get(key)
        if not isinstance(x, list) or not x or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in x):
            raise DataError(path, row, f"{key!r} must be a non-empty list of numbers")
        if dims is None:
            dims = len(x)
        elif len(x) != dims:
            raise DataError(path, row, f"has {len(x)} coordinates, earlier rows have {dims}")
        vecs.append([float(c) for c in x])
        eps.append(_epsilon(path, row, obj.get("epsilon")))
    arr = np.array(vecs)
    if not np.isfinite(arr).all():
        raise DataError(path, int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0]) + 1, "non-finite coordinate")
    return arr, eps


def _vectors(path, r, d, binary):
    arr, eps = _vector_rows(path, "x")
    if d is not None and arr.shape[1] != d:
        raise DataError(path, 1, f"has {arr.shape[1]} coordinates, expected d = {d}")
    norms = np.linalg.norm(arr, axis=1)
    bad = ~(norms <= r * (1 + 1e-9))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DataError(path, i + 1, f"norm {norms[i]!r} exceeds r = {r!r}")
    return arr, PrivacyBudgets(eps)


_READERS = {Schema.SCALAR: _scalar, Schema.VECTOR: _vectors, Schema.ITEM: _items}


def ingest_dataset(path, schema, *, r: float = 1.0, d: int | None = None, binary: bool = False):
    """Load user data and their budgets. ``binary`` restricts scalars to ±1."""
    return _READERS[Schema(schema)](path, r, d, binary)


# ------------------------------------------------------------------ reports


def write_scalar_reports(path, reports: ScalarReports) -> None:
    lines = ["value,epsilon"] + [f"{fmt(v)},{fmt(e)}" for v, e in zip(reports.values, reports.epsilons)]
    write_text(path, "\n".join(lines) + "\n")


def read_scalar_reports(path, mechanism) -> ScalarReports:
    mech = ScalarMechanism(mechanism)
    values, eps = [], []
    for row, (value, e) in _csv_rows(path, ("value", "epsilon")):
        try:
            v = float(value)
        except ValueError:
            raise DataError(path, row, f"report {value!r} is not a number") from None
        if not math.isfinite(v) or (mech is ScalarMechanism.RR and v not in (-1.0, 1.0)):
            raise DataError(path, row, f"invalid {mech.value} report {value!r}")
        values.append(v)
        eps.append(_epsilon(path, row, e))
    return ScalarReports(np.array(values), np.array(eps), mech)


def write_duchi_reports(path, reports: DuchiReports) -> None:
    lines = [
        "{" + f'"y": [{", ".join(fmt(c) for c in y)}], "epsilon": {fmt(e)}' + "}"
        for y, e in zip(reports.points, reports.epsilons)
    ]
    write_text(path, "\n".join(lines) + "\n")


def read_duchi_reports(path, r: float, radii_fn) -> DuchiReports:
    arr, eps = _vector_rows(path, "y")
    eps = np.array(eps)
    return DuchiReports(arr, eps, float(r), radii_fn(arr.shape[1], eps))


def write_sparse_reports(path, reports: SparseReports) -> None:
    lines = ["index,value,epsilon"] + [
        f"{j},{fmt(v)},{fmt(e)}" for j, v, e in zip(reports.indices, reports.values, reports.epsilons)
    ]
    write_text(path, "\n".join(lines) + "\n")


def read_sparse_reports(path, d: int) -> SparseReports:
    """Read one-sparse reports; ``m`` is taken from the largest index until
    :func:`check_sparse_reports` binds them to a projection."""
    idx, values, eps = [], [], []
    for row, (j, value, e) in _csv_rows(path, ("index", "value", "epsilon")):
        try:
            jj, v = int(j), float(value)
        except ValueError:
            raise DataError(path, row, "index must be an integer and value a number") from None
        if jj < 0:
            raise DataError(path, row, f"index {jj} is negative")
        if not math.isfinite(v):
            raise DataError(path, row, f"report {value!r} is not finite")
        idx.append(jj)
        values.append(v)
        eps.append(_epsilon(path, row, e))
    indices = np.array(idx, dtype=np.int64)
    return SparseReports(indices, np.array(values), np.array(eps), int(indices.max()) + 1, d, "")


def check_sparse_reports(path, reports: SparseReports, m: int, seed_hash: str) -> SparseReports:
    if reports.m > m:
        row = int(np.flatnonzero(reports.indices >= m)[0]) + 1
        raise DataError(path, row, f"index {reports.indices[row - 1]} outside [0, {m})")
    return replace(reports, m=m, seed_hash=seed_hash)


# ------------------------------------------------------------------- output


def write_text(path, text: str) -> None:
    # newline="\n" keeps bytes identical across platforms
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def csv_text(header, rows) -> str:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (bool, np.bool_)):
            return str(bool(v)).lower()
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return fmt(v)
        return str(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> None:
    write_text(path, csv_text(header, rows))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
