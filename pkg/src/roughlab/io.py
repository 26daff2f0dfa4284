"""JSON and CSV serialization for partitions, coefficients, paths and reports.

Floats are written with ``repr`` (shortest round-trip decimal), so every load
reproduces the saved values bit for bit.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from .partition import PartitionError, PartitionSequence, from_levels, make_badic

__all__ = [
    "FormatError",
    "partition_to_dict",
    "partition_from_dict",
    "coefficients_to_dict",
    "coefficients_from_dict",
    "read_path_csv",
    "write_path_csv",
    "dumps",
    "write_json",
    "read_json",
    "write_table_csv",
]


class FormatError(ValueError):
    """Malformed input file; the message names the offending line or field."""


def _num(v: float) -> str:
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        # JSON has no inf/nan; keep them readable as strings
        return f if math.isfinite(f) else repr(f)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def write_json(obj, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path: Union[str, Path]):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def partition_to_dict(seq: PartitionSequence, inline: bool = False) -> dict:
    """Recipe form for generated grids, explicit decimal-string points otherwise."""
    if seq.recipe is not None and not inline:
        return {"recipe": dict(seq.recipe)}
    return {"T": _num(seq.T), "levels": [[_num(v) for v in lvl] for lvl in seq.levels]}


def partition_from_dict(d: dict) -> PartitionSequence:
    if "recipe" in d:
        r = d["recipe"]
        try:
            return make_badic(float(r["T"]), int(r["base"]), int(r["depth"]))
        except KeyError as exc:
            raise FormatError(f"partition recipe lacks {exc}") from None
    if "T" not in d or "levels" not in d:
        raise FormatError("partition needs 'T' and 'levels' or a 'recipe'")
    try:
        levels = [[float(v) for v in lvl] for lvl in d["levels"]]
        return from_levels(float(d["T"]), levels)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, PartitionError):
            raise
        raise FormatError(f"bad partition point: {exc}") from None


def coefficients_to_dict(coeffs, inline_partition: bool = False) -> dict:
    return {
        "partition": partition_to_dict(coeffs.partition, inline_partition),
        "x0": float(coeffs.x0),
        "xT": float(coeffs.xT),
        "theta": [[float(v) for v in row] for row in coeffs.theta],
    }


def coefficients_from_dict(d: dict, partition: PartitionSequence = None):
    """Load coefficients; rows that disagree with the index sets raise ShapeError."""
    from .schauder import SchauderCoefficients

    for key in ("x0", "xT", "theta"):
        if key not in d:
            raise FormatError(f"coefficient file lacks '{key}'")
    if partition is None:
        if "partition" not in d:
            raise FormatError("coefficient file lacks 'partition' and none was given")
        partition = partition_from_dict(d["partition"])
    rows = tuple(np.asarray(r, dtype=float) for r in d["theta"])
    return SchauderCoefficients(partition, float(d["x0"]), float(d["xT"]), rows)


def read_path_csv(path: Union[str, Path]):
    """Read ``t,x`` samples; rows are sorted by time and duplicate times rejected."""
    from .schauder import SampledPath

    text = Path(path).read_text()
    reader = csv.reader(_io.StringIO(text))
    ts, xs = [], []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if not header_seen:
            header_seen = True
            if [c.strip().lower() for c in row] == ["t", "x"]:
                continue
        if len(row) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            t, x = float(row[0]), float(row[1])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric value {row!r}") from None
        if not (math.isfinite(t) and math.isfinite(x)):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        ts.append(t)
        xs.append(x)
    if len(ts) < 2:
        raise FormatError(f"{path}: need at least two samples, found {len(ts)}")
    ts, xs = np.array(ts), np.array(xs)
    order = np.argsort(ts, kind="stable")
    ts, xs = ts[order], xs[order]
    dup = np.nonzero(np.diff(ts) == 0)[0]
    if dup.size:
        raise FormatError(f"{path}: duplicate time {ts[dup[0]]!r}")
    return SampledPath(ts, xs)


def write_path_csv(x, path: Union[str, Path]) -> None:
    lines = ["t,x"] + [f"{_num(t)},{_num(v)}" for t, v in zip(x.times, x.values)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_table_csv(columns: dict, path: Union[str, Path, None] = None) -> str:
    """Write equal-length columns as CSV; returns the text."""
    names = list(columns)
    n = len(columns[names[0]]) if names else 0
    out = [",".join(names)]
    for i in range(n):
        out.append(",".join(_cell(columns[c][i]) for c in names))
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return _num(v)
    return str(v)
