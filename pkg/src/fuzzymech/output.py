"""Plot-ready columnar files and stable JSON.

CSV: comma separated, '.' decimal point, one header row of ``name[unit]``
labels, LF line endings, floats written with 17 significant digits so the
bytes depend only on the values.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_csv(path, columns) -> Path:
    """Write ``columns`` (sequence of ``(name, unit, values)``) to ``path``."""
    path = Path(path)
    names = [f"{name}[{unit}]" for name, unit, _ in columns]
    arrays = [np.asarray(v, dtype=float).ravel() for _, _, v in columns]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("columns must have equal length")
    lines = [",".join(names)]
    lines.extend(",".join(_fmt(a[i]) for a in arrays) for i in range(n))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def dumps(obj) -> str:
    """UTF-8 JSON with sorted keys; non-finite floats are written as strings."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
    return path
