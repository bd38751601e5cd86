"""Trace files: one ``#``-prefixed JSON header line followed by a CSV body.

Stored iterates, when requested, go to a sidecar ``.npz`` next to the CSV.
"""

from __future__ import annotations

import csv
import io
import json
import time
from pathlib import Path
from typing import Union

import numpy as np

from ..solvers import IterationTrace

LEADING = ("k", "residual", "lyapunov", "eta", "beta", "bound_rhs")


def _columns(rows) -> list:
    seen = {}
    for r in rows:
        for c in r:
            seen.setdefault(c, None)
    lead = [c for c in LEADING if c in seen]
    return lead + [c for c in seen if c not in lead]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not np.isfinite(o):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(o):
    # json.dumps emits NaN/Infinity for bad floats, which is not valid JSON
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, float) and not np.isfinite(o):
        return str(o)
    return o


def header_line(trace: IterationTrace, timestamp: bool = True) -> str:
    h = dict(trace.header)
    h["status"] = trace.status
    if timestamp:
        h["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return "#" + json.dumps(_clean(h), sort_keys=True, default=_jsonable)


def body_text(trace: IterationTrace) -> str:
    cols = _columns(trace.rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in trace.rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def iterates_path(path: Union[str, Path]) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".iterates.npz")


def write_trace(trace: IterationTrace, path: Union[str, Path], timestamp: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(header_line(trace, timestamp) + "\n")
        fh.write(body_text(trace))
    if trace.iterates:
        names = list(trace.iterates[0])
        np.savez(iterates_path(path), **{n: np.stack([it[n] for it in trace.iterates]) for n in names})
    return path


def _parse(v: str):
    if v == "":
        return None
    if v in ("True", "False"):
        return v == "True"
    try:
        return int(v)
    except ValueError:
        return float(v)


def read_trace(path: Union[str, Path]) -> IterationTrace:
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path} does not start with a JSON header line")
        header = json.loads(first[1:])
        rows = [{k: _parse(v) for k, v in r.items()} for r in csv.DictReader(fh)]
    trace = IterationTrace(header, rows, status=header.get("status", "unknown"))
    side = iterates_path(path)
    if side.exists():
        with np.load(side) as data:
            names = list(data.files)
            arrays = {n: data[n] for n in names}
        trace.iterates = [{n: arrays[n][i] for n in names} for i in range(len(rows))]
    return trace
