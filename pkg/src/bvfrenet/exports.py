"""Deterministic file output: frame and curve CSV, OBJ polylines, JSON.

Column orders
-------------
frames CSV : ``s, g11, g12, ..., gNN, jump`` (row-major frame entries;
             ``jump`` is -1 on the left copy of a jump node, +1 on the right
             copy, 0 elsewhere)
curve CSV  : ``s, x, y[, z]``
table CSV  : caller-chosen header

Numbers are written with ``repr`` precision (17 significant digits) so
reruns on the same platform are byte-identical.  Every file is written to
a temporary name in the target directory and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = [
    "atomic_write",
    "frames_csv",
    "curve_csv",
    "curve_obj",
    "table_csv",
    "to_json",
    "read_frames_csv",
    "read_curve_csv",
]


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _num(x) -> str:
    x = float(x)
    if x == 0.0:
        return "0.0"  # no negative zero in the output
    return repr(x)


def _rows_to_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def frames_csv(path) -> str:
    """CSV text for a :class:`~bvfrenet.solver.FramePath`."""
    n = path.n
    header = ["s"] + [f"g{i + 1}{j + 1}" for i in range(n) for j in range(n)] + ["jump"]
    flags = path.jump_flags
    flat = path.frames.reshape(len(path.s), -1)
    rows = ([_num(s)] + [_num(v) for v in f] + [str(int(k))] for s, f, k in zip(path.s, flat, flags))
    return _rows_to_text(header, rows)


def curve_csv(curve) -> str:
    header = ["s", "x", "y", "z"][: 1 + curve.dim] if curve.dim <= 3 else ["s"] + [f"x{i + 1}" for i in
                                                                                    range(curve.dim)]
    rows = ([_num(s)] + [_num(v) for v in p] for s, p in zip(curve.s, curve.points))
    return _rows_to_text(header, rows)


def curve_obj(curve) -> str:
    """Wavefront OBJ polyline (planar curves get ``z = 0``)."""
    pts = curve.points
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    if pts.shape[1] != 3:
        raise ValueError("OBJ export needs a curve in R^2 or R^3")
    lines = ["# polyline, one vertex per arc-length sample"]
    lines += [f"v {_num(x)} {_num(y)} {_num(z)}" for x, y, z in pts]
    lines.append("l " + " ".join(str(i + 1) for i in range(len(pts))))
    return "\n".join(lines) + "\n"


def table_csv(header, rows) -> str:
    return _rows_to_text(header, ([_num(v) if isinstance(v, (float, np.floating)) else v for v in r]
                                  for r in rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return 0.0 if x == 0.0 else x
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    return rows[0], np.array(rows[1:], dtype=float)


def read_frames_csv(path):
    """``(s, frames, jump_flags)`` from a frames CSV."""
    header, data = _read_csv(path)
    if header[0] != "s" or header[-1] != "jump":
        raise ValueError(f"{path}: not a frames CSV")
    n = int(round(math.sqrt(len(header) - 2)))
    return data[:, 0], data[:, 1:-1].reshape(-1, n, n), data[:, -1].astype(int)


def read_curve_csv(path):
    """``(s, points)`` from a curve CSV."""
    header, data = _read_csv(path)
    if header[0] != "s":
        raise ValueError(f"{path}: not a curve CSV")
    return data[:, 0], data[:, 1:]
