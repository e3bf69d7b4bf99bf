"""Plain-text formats: mask files, field CSV, matrices, report tables and SVG plots.

Mask file::

    nx ny h x0 y0
    <ny rows of nx characters 0/1, top row (largest j) first>
    <optional slit lines "axis i j": axis 0 = vertical face u[i, j], 1 = horizontal face v[i, j]>

Everything here writes through :func:`atomic_write`, so readers never see a
partial file.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .fields import CellField, MacField, VertexField
from .geometry import DomainMask, Grid


def atomic_write(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "", "encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# Masks -------------------------------------------------------------------------


def format_mask(mask: DomainMask) -> str:
    g = mask.grid
    lines = [f"{g.nx} {g.ny} {g.h!r} {g.origin[0]!r} {g.origin[1]!r}"]
    for j in range(g.ny - 1, -1, -1):
        lines.append("".join("1" if c else "0" for c in mask.cells[:, j]))
    for i, j in zip(*np.nonzero(mask.slit_u)):
        lines.append(f"0 {i} {j}")
    for i, j in zip(*np.nonzero(mask.slit_v)):
        lines.append(f"1 {i} {j}")
    return "\n".join(lines) + "\n"


def parse_mask(text: str) -> DomainMask:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty mask file")
    head = lines[0].split()
    if len(head) != 5:
        raise ValueError("mask header must be 'nx ny h x0 y0'")
    try:
        nx, ny = int(head[0]), int(head[1])
        h, x0, y0 = float(head[2]), float(head[3]), float(head[4])
    except ValueError as exc:
        raise ValueError(f"bad mask header: {exc}") from None
    grid = Grid((x0, y0), h, nx, ny)
    rows = lines[1 : 1 + ny]
    if len(rows) != ny or any(len(r) != nx or set(r) - {"0", "1"} for r in rows):
        raise ValueError(f"mask body must be {ny} rows of {nx} characters 0/1")
    cells = np.array([[c == "1" for c in r] for r in reversed(rows)], bool).T
    su = np.zeros(grid.shape_u, bool)
    sv = np.zeros(grid.shape_v, bool)
    for ln in lines[1 + ny :]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"bad slit line {ln!r}")
        axis, i, j = (int(p) for p in parts)
        target = {0: su, 1: sv}.get(axis)
        if target is None or not (0 <= i < target.shape[0] and 0 <= j < target.shape[1]):
            raise ValueError(f"slit face out of range: {ln!r}")
        target[i, j] = True
    return DomainMask(grid, cells, su, sv)


def write_mask(path, mask: DomainMask) -> Path:
    return atomic_write(path, format_mask(mask))


def read_mask(path) -> DomainMask:
    return parse_mask(Path(path).read_text(encoding="utf-8"))


# Fields ------------------------------------------------------------------------

_KIND = {CellField: "cell", VertexField: "vertex"}


def field_rows(w):
    """(kind, axis, i, j, value) rows; MAC fields use kind ``face`` with axis 0/1."""
    if isinstance(w, MacField):
        for axis, arr in ((0, w.u), (1, w.v)):
            for (i, j), x in np.ndenumerate(arr):
                yield "face", axis, i, j, x
    else:
        kind = _KIND[type(w)]
        for (i, j), x in np.ndenumerate(w.values):
            yield kind, 0, i, j, x


def format_fields(*fields) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["kind", "axis", "i", "j", "value"])
    for w in fields:
        if w is None:
            continue
        for kind, axis, i, j, x in field_rows(w):
            wr.writerow([kind, axis, i, j, repr(float(x))])
    return buf.getvalue()


def write_fields(path, *fields) -> Path:
    return atomic_write(path, format_fields(*fields))


def read_mac_field(path, grid: Grid) -> MacField:
    """Read the ``face`` rows of a field CSV onto ``grid``."""
    u = np.zeros(grid.shape_u)
    v = np.zeros(grid.shape_v)
    vertex = np.zeros(grid.shape_vertices)
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != ["kind", "axis", "i", "j", "value"]:
            raise ValueError("field CSV must have columns kind,axis,i,j,value")
        for row in rd:
            kind, axis, i, j = row["kind"], int(row["axis"]), int(row["i"]), int(row["j"])
            target = {("face", 0): u, ("face", 1): v, ("vertex", 0): vertex}.get((kind, axis))
            if target is None:
                continue
            if not (0 <= i < target.shape[0] and 0 <= j < target.shape[1]):
                raise ValueError(f"field entry out of range for the grid: {kind} {axis} {i} {j}")
            target[i, j] = float(row["value"])
            seen.add(kind)
    if "face" not in seen:
        raise ValueError("field CSV has no face rows")
    return MacField(grid, u, v)


def read_vertex_field(path, grid: Grid) -> VertexField:
    vals = np.zeros(grid.shape_vertices)
    found = False
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != ["kind", "axis", "i", "j", "value"]:
            raise ValueError("field CSV must have columns kind,axis,i,j,value")
        for row in rd:
            if row["kind"] != "vertex":
                continue
            i, j = int(row["i"]), int(row["j"])
            if not (0 <= i < vals.shape[0] and 0 <= j < vals.shape[1]):
                raise ValueError(f"field entry out of range for the grid: vertex {i} {j}")
            vals[i, j] = float(row["value"])
            found = True
    if not found:
        raise ValueError("field CSV has no vertex rows")
    return VertexField(grid, vals)


# Matrices ----------------------------------------------------------------------


def format_matrix(A) -> bytes:
    """Matrix Market coordinate format (general, full precision)."""
    buf = io.BytesIO()
    scipy.io.mmwrite(buf, sp.coo_matrix(A), symmetry="general", precision=17)
    return buf.getvalue()


def write_matrix(path, A) -> Path:
    return atomic_write(path, format_matrix(A))


def read_matrix(path) -> sp.csr_matrix:
    return sp.csr_matrix(scipy.io.mmread(str(path)))


# Reports -----------------------------------------------------------------------

REPORT_COLUMNS = ["mode", "n", "h", "dofs", "error_l2", "rate", "iters", "residual", "seconds"]


def _num(x) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def format_report(report, timings: bool = False) -> str:
    """CSV of a convergence report, one row per (mode, level).

    Wall-clock seconds make the file non-reproducible, so the column is left
    empty unless ``timings`` is set.
    """
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(REPORT_COLUMNS)
    for r in report.records():
        wr.writerow(
            [
                r.mode.value,
                r.n,
                _num(r.h),
                r.dofs,
                _num(r.error),
                _num(r.rate),
                r.iterations,
                _num(r.residual),
                _num(r.seconds) if timings else "",
            ]
        )
    return buf.getvalue()


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def svg_plot(series: dict, title: str = "", xlabel: str = "level", ylabel: str = "log10 error") -> str:
    """Self-contained SVG line plot of ``log10(y)`` against x for each named series.

    Non-positive values are clamped to 1e-16 so exact zeros stay on the chart.
    """
    W, H, L, R, T, B = 480, 320, 60, 120, 30, 40
    pts = {}
    for name, (xs, ys) in series.items():
        pts[name] = [(float(x), math.log10(max(float(y), 1e-16))) for x, y in zip(xs, ys) if not math.isnan(float(y))]
    allp = [p for v in pts.values() for p in v] or [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = math.floor(min(p[1] for p in allp)), math.ceil(max(p[1] for p in allp))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return L + (x - x0) / (x1 - x0) * (W - L - R)

    def sy(y):
        return T + (y1 - y) / (y1 - y0) * (H - T - B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="13">{_esc(title)}</text>',
        f'<line x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>',
        f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>',
    ]
    step = max(1, int(math.ceil((y1 - y0) / 8)))
    for y in range(int(y0), int(y1) + 1, step):
        out.append(f'<text x="{L - 6}" y="{sy(y) + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="10">{y}</text>')
        out.append(f'<line x1="{L}" y1="{sy(y):.1f}" x2="{W - R}" y2="{sy(y):.1f}" stroke="#dddddd"/>')
    xt = sorted({p[0] for p in allp})
    for x in xt:
        out.append(
            f'<text x="{sx(x):.1f}" y="{H - B + 14}" text-anchor="middle" font-family="sans-serif" font-size="10">{x:g}</text>'
        )
    out.append(f'<text x="{(L + W - R) / 2:.1f}" y="{H - 6}" text-anchor="middle" font-family="sans-serif" font-size="11">{_esc(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{(T + H - B) / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="11" '
        f'transform="rotate(-90 14 {(T + H - B) / 2:.1f})">{_esc(ylabel)}</text>'
    )
    for k, (name, p) in enumerate(pts.items()):
        c = _COLORS[k % len(_COLORS)]
        if p:
            path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in p)
            out.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.5"/>')
            for x, y in p:
                out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.5" fill="{c}"/>')
        ly = T + 14 * k + 8
        out.append(f'<line x1="{W - R + 10}" y1="{ly}" x2="{W - R + 28}" y2="{ly}" stroke="{c}" stroke-width="1.5"/>')
        out.append(f'<text x="{W - R + 32}" y="{ly + 4}" font-family="sans-serif" font-size="10">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def report_svg(report, title: str = "") -> str:
    series = {}
    for mode in report.families:
        recs = report.records(mode)
        series[mode.value] = ([r.n for r in recs], [r.error for r in recs])
    return svg_plot(series, title=title or f"{report.operator} {report.direction.value}")


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
