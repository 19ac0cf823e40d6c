"""CSV tables and minimal SVG figures.

CSV files are UTF-8, comma separated, with a header row ``x1..xd[,y|label]``.
Floats are written with ``repr`` (shortest round-trip form), so
``read_csv(write_csv(t))`` reproduces every finite double exactly.
"""

from __future__ import annotations

import csv
import html
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LABEL_COLUMNS = ("y", "label")


class CsvFormatError(ValueError):
    """Malformed CSV input; the message carries the offending line number."""


@dataclass
class Table:
    X: np.ndarray
    y: np.ndarray | None = None
    columns: list[str] = field(default_factory=list)
    label_name: str | None = None


def read_csv(path) -> Table:
    """Read a numeric CSV; a trailing ``y`` or ``label`` column becomes ``Table.y``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    if not header or any(not h for h in header):
        raise CsvFormatError(f"{path}:1: empty column name in header")
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise CsvFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            values = [float(c) for c in row]
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{lineno}: non-numeric field ({exc})") from None
        if not all(math.isfinite(v) for v in values):
            raise CsvFormatError(f"{path}:{lineno}: non-finite value")
        body.append(values)
    if not body:
        raise CsvFormatError(f"{path}: no rows")
    data = np.asarray(body, dtype=float)
    label_idx = [i for i, h in enumerate(header) if h in LABEL_COLUMNS]
    if len(label_idx) > 1:
        raise CsvFormatError(f"{path}:1: more than one label column")
    if label_idx:
        li = label_idx[0]
        keep = [i for i in range(len(header)) if i != li]
        if not keep:
            raise CsvFormatError(f"{path}:1: no feature columns")
        return Table(data[:, keep], data[:, li], [header[i] for i in keep], header[li])
    return Table(data, None, header, None)


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path, columns, rows) -> None:
    """Write ``rows`` (2-D array-like) under the header ``columns``."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    if rows.shape[1] != len(columns):
        raise ValueError(f"{len(columns)} column names for {rows.shape[1]} columns")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_table(path, table: Table) -> None:
    cols = list(table.columns) or [f"x{j + 1}" for j in range(table.X.shape[1])]
    data = table.X
    if table.y is not None:
        cols.append(table.label_name or "y")
        data = np.column_stack([table.X, table.y])
    write_csv(path, cols, data)


# --- SVG -------------------------------------------------------------------


@dataclass
class Scatter:
    points: np.ndarray
    color: str = "#1f77b4"
    radius: float = 3.0
    label: str = "scatter"


@dataclass
class Arrow:
    origins: np.ndarray
    vectors: np.ndarray
    scale: float = 1.0
    color: str = "#d62728"
    label: str = "arrows"


@dataclass
class HeatScatter:
    points: np.ndarray
    values: np.ndarray
    radius: float = 3.0
    label: str = "heat"


def _heat_color(t: float) -> str:
    # blue -> yellow -> red ramp
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        u = t / 0.5
        r, g, b = u, u, 1.0 - u
    else:
        u = (t - 0.5) / 0.5
        r, g, b = 1.0, 1.0 - u, 0.0
    return "#{:02x}{:02x}{:02x}".format(round(255 * r), round(255 * g), round(255 * b))


def _as_2d(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[1] == 1:
        P = np.column_stack([P[:, 0], np.zeros(P.shape[0])])
    if P.shape[1] != 2:
        raise ValueError("SVG layers need 1-D or 2-D points")
    return P


def write_svg(path, layers, width: int = 480, height: int = 480, margin: int = 24) -> None:
    """Render scatter, arrow and heat-scatter layers into one SVG file."""
    prepared = []
    extent = []
    for layer in layers:
        if isinstance(layer, Arrow):
            O, V = _as_2d(layer.origins), _as_2d(layer.vectors) * layer.scale
            extent += [O, O + V]
            prepared.append((layer, O, V))
        elif isinstance(layer, (Scatter, HeatScatter)):
            P = _as_2d(layer.points)
            extent.append(P)
            prepared.append((layer, P, None))
        else:
            raise TypeError(f"unsupported layer {type(layer).__name__}")
    allpts = np.vstack(extent) if extent else np.zeros((1, 2))
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)

    def tx(p):
        u = (p - lo) / span
        return margin + u[..., 0] * (width - 2 * margin), height - margin - u[..., 1] * (height - 2 * margin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto">'
        '<path d="M0,0 L6,3 L0,6 z"/></marker></defs>',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for layer, P, V in prepared:
        name = html.escape(layer.label, quote=True)
        if isinstance(layer, Arrow):
            out.append(f'<g class="arrow" id="{name}" stroke="{layer.color}" fill="{layer.color}">')
            x0, y0 = tx(P)
            x1, y1 = tx(P + V)
            for a, b, c, d in zip(x0, y0, x1, y1):
                out.append(f'<line x1="{a:.2f}" y1="{b:.2f}" x2="{c:.2f}" y2="{d:.2f}" marker-end="url(#head)"/>')
        elif isinstance(layer, HeatScatter):
            vals = np.asarray(layer.values, dtype=float).ravel()
            if vals.shape[0] != P.shape[0]:
                raise ValueError("heat values must match the number of points")
            vmin, vmax = vals.min(), vals.max()
            scale = vmax - vmin if vmax > vmin else 1.0
            out.append(f'<g class="heat" id="{name}">')
            xs, ys = tx(P)
            for a, b, v in zip(xs, ys, vals):
                out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="{layer.radius}" '
                           f'fill="{_heat_color((v - vmin) / scale)}"/>')
        else:
            out.append(f'<g class="scatter" id="{name}" fill="{layer.color}">')
            xs, ys = tx(P)
            for a, b in zip(xs, ys):
                out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="{layer.radius}"/>')
        out.append("</g>")
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
