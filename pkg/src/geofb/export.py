"""Artifact writers: trace CSV, deterministic JSON and log-log SVG plots."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "TRACE_COLUMNS",
    "trace_to_csv",
    "write_trace_csv",
    "read_trace_csv",
    "to_jsonable",
    "dumps_json",
    "write_json",
    "loglog_svg",
    "write_svg",
]

TRACE_COLUMNS = ("n", "gap", "step", "resid")


def _fmt(v) -> str:
    return "%.17g" % v


def trace_to_csv(trace) -> str:
    """CSV text with header ``n,gap,step,resid[,dist][,support_size]``.

    Every float is written with 17 significant digits so that reading it
    back reproduces the double exactly.
    """
    cols = [np.arange(trace.gap.size), trace.gap, trace.step, trace.resid]
    header = list(TRACE_COLUMNS)
    if trace.dist is not None:
        header.append("dist")
        cols.append(trace.dist)
    if trace.support is not None:
        header.append("support_size")
        cols.append(trace.support_size)
    lines = [",".join(header)]
    ints = {0, len(header) - 1} if trace.support is not None else {0}
    for row in zip(*cols):
        lines.append(",".join(str(int(v)) if j in ints else _fmt(v) for j, v in enumerate(row)))
    return "\n".join(lines) + "\n"


def write_trace_csv(trace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(trace_to_csv(trace))
    return path


def read_trace_csv(path) -> dict:
    """Columns of a trace CSV as float arrays keyed by header name.

    Raises ValueError when the header lacks ``gap``, ``step`` or ``resid``,
    when rows are ragged or when a value does not parse.
    """
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty trace file")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in TRACE_COLUMNS[1:] if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: no data rows")
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}:{i}: expected {len(header)} fields, got {len(r)}")
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return {h: data[:, j] for j, h in enumerate(header)}


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))
    return path


# -- svg -----------------------------------------------------------------------------

_W, _H, _PAD = 640, 420, 60


def _points(n, y, xr, yr):
    (x0, x1), (y0, y1) = xr, yr
    px = _PAD + (np.log10(n) - x0) / (x1 - x0 or 1.0) * (_W - 2 * _PAD)
    py = _H - _PAD - (np.log10(y) - y0) / (y1 - y0 or 1.0) * (_H - 2 * _PAD)
    return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))


def _thin(n, y, max_points=800):
    if n.size <= max_points:
        return n, y
    idx = np.unique(np.round(np.logspace(0, math.log10(n.size), max_points)).astype(int) - 1)
    return n[idx], y[idx]


def loglog_svg(series: dict, envelope=None, title: str = "") -> str:
    """Self-contained SVG: one polyline per series on log-log axes.

    ``series`` maps a label to a 1-D array indexed by ``n``; index 0 and
    nonpositive values are dropped.  ``envelope`` (same indexing) is drawn
    dashed.
    """
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    curves = []
    for label, y in series.items():
        y = np.asarray(y, dtype=float)
        n = np.arange(y.size, dtype=float)
        keep = (n >= 1) & (y > 0) & np.isfinite(y)
        if keep.any():
            curves.append((label, *_thin(n[keep], y[keep]), False))
    if envelope is not None:
        e = np.asarray(envelope, dtype=float)
        n = np.arange(e.size, dtype=float)
        keep = (n >= 1) & (e > 0) & np.isfinite(e)
        if keep.any():
            curves.append(("envelope", *_thin(n[keep], e[keep]), True))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>']
    if curves:
        allx = np.concatenate([c[1] for c in curves])
        ally = np.concatenate([c[2] for c in curves])
        xr = (0.0, max(math.log10(allx.max()), 1.0))
        yr = (math.floor(math.log10(ally.min())), math.ceil(math.log10(ally.max())))
        if yr[0] == yr[1]:
            yr = (yr[0] - 1, yr[1] + 1)
        out.append(f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" '
                   f'height="{_H - 2 * _PAD}" fill="none" stroke="black"/>')
        for k in range(int(xr[0]), int(math.floor(xr[1])) + 1):
            x = _PAD + (k - xr[0]) / (xr[1] - xr[0]) * (_W - 2 * _PAD)
            out.append(f'<text x="{x:.1f}" y="{_H - _PAD + 18}" font-size="11" '
                       f'text-anchor="middle">1e{k}</text>')
        step = max(1, int(math.ceil((yr[1] - yr[0]) / 8)))
        for k in range(int(yr[0]), int(yr[1]) + 1, step):
            y = _H - _PAD - (k - yr[0]) / (yr[1] - yr[0]) * (_H - 2 * _PAD)
            out.append(f'<text x="{_PAD - 6}" y="{y + 4:.1f}" font-size="11" '
                       f'text-anchor="end">1e{k}</text>')
        for i, (label, n, y, dashed) in enumerate(curves):
            color = "#555555" if dashed else colors[i % len(colors)]
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                       f'points="{_points(n, y, xr, yr)}"/>')
            out.append(f'<text x="{_W - _PAD - 4}" y="{_PAD + 16 + 14 * i}" font-size="12" '
                       f'text-anchor="end" fill="{color}">{label}</text>')
    out.append(f'<text x="{_W / 2:.0f}" y="{_PAD / 2:.0f}" font-size="14" '
               f'text-anchor="middle">{_escape(title)}</text>')
    out.append(f'<text x="{_W / 2:.0f}" y="{_H - 12}" font-size="12" text-anchor="middle">n</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(text: str, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return path
