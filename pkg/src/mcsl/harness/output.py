"""CSV tables and self-contained SVG plots.

Every CSV starts with one ``#`` metadata line (seed, package version, config
hash) followed by a header row. Floats are written with ``repr`` so files parse
back to identical values.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(s: str):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def metadata_line(meta: dict) -> str:
    items = {"version": __version__, **meta}
    return "# " + " ".join(f"{k}={_fmt(v)}" for k, v in items.items())


def emit_csv(table: Table, path: str | Path, meta: dict | None = None) -> Path:
    """Write ``table`` with a metadata comment line; raises ``OSError`` if unwritable."""
    path = Path(path)
    buf = io.StringIO()
    buf.write(metadata_line(meta or {}) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def read_csv(path: str | Path) -> tuple[dict, Table]:
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        meta = dict(item.split("=", 1) for item in first[1:].split())
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [tuple(_parse(s) for s in r) for r in reader]
    return meta, Table(columns, rows)


# --- SVG ---------------------------------------------------------------------

_W, _H = 640, 480
_PAD = 60
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _num(x: float) -> str:
    return f"{x:.2f}"


def _svg_doc(body: list[str], width=_W, height=_H) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def loglog_svg(series: dict, title: str = "", guide_slope: float = -0.5) -> str:
    """``series`` maps a label to ``(n_values, errors)``; plots log10(error) vs log10(n)."""
    if not series or any(len(x) == 0 for x, _ in series.values()):
        raise ValueError("nothing to plot")
    lx = np.concatenate([np.log10(np.asarray(x, float)) for x, _ in series.values()])
    ly = np.concatenate([np.log10(np.asarray(y, float)) for _, y in series.values()])
    x0, x1 = float(lx.min()), float(lx.max())
    y0, y1 = float(ly.min()), float(ly.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    mx = 0.05 * (x1 - x0)
    my = 0.08 * (y1 - y0)
    x0, x1, y0, y1 = x0 - mx, x1 + mx, y0 - my, y1 + my

    def px(v):
        return _PAD + (v - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def py(v):
        return _H - _PAD - (v - y0) / (y1 - y0) * (_H - 2 * _PAD)

    body = [
        f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" fill="none" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 15}" text-anchor="middle" font-size="13">log10(n)</text>',
        f'<text x="18" y="{_H / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {_H / 2})">log10(error)</text>',
    ]
    for k in range(math.ceil(x0 * 10), math.floor(x1 * 10) + 1, 2):
        v = k / 10
        body.append(f'<text x="{_num(px(v))}" y="{_H - _PAD + 16}" text-anchor="middle" font-size="11">{v:.1f}</text>')
    for k in range(math.ceil(y0 * 10), math.floor(y1 * 10) + 1, 2):
        v = k / 10
        body.append(f'<text x="{_PAD - 6}" y="{_num(py(v) + 4)}" text-anchor="end" font-size="11">{v:.1f}</text>')
    for idx, (label, (x, y)) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(
            f"{'M' if i == 0 else 'L'}{_num(px(a))},{_num(py(b))}"
            for i, (a, b) in enumerate(zip(np.log10(np.asarray(x, float)), np.log10(np.asarray(y, float))))
        )
        body.append(f'<path class="series" d="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly_ = _PAD + 18 + 18 * idx
        body.append(f'<text x="{_W - _PAD - 8}" y="{ly_}" text-anchor="end" font-size="12" fill="{color}">{label}</text>')
    # reference line through the first point of the first series
    fx, fy = next(iter(series.values()))
    gx0 = math.log10(float(fx[0]))
    gy0 = math.log10(float(fy[0])) + 0.1 * (y1 - y0)
    gx1 = float(lx.max())
    gy1 = gy0 + guide_slope * (gx1 - gx0)
    body.append(
        f'<path class="guide" d="M{_num(px(gx0))},{_num(py(gy0))} L{_num(px(gx1))},{_num(py(gy1))}" '
        f'fill="none" stroke="black" stroke-dasharray="6,4"/>'
    )
    body.append(
        f'<text x="{_num(px(gx1) - 4)}" y="{_num(py(gy1) - 6)}" text-anchor="end" font-size="11">slope {guide_slope:g}</text>'
    )
    return _svg_doc(body)


def _diverging(t: float) -> str:
    """Blue-white-red color for t in [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        s = t / 0.5
        r, g, b = 59 + s * (255 - 59), 76 + s * (255 - 76), 192 + s * (255 - 192)
    else:
        s = (t - 0.5) / 0.5
        r, g, b = 255 - s * (255 - 180), 255 - s * (255 - 4), 255 - s * (255 - 38)
    return f"#{round(r):02x}{round(g):02x}{round(b):02x}"


def heatmap_svg(values: np.ndarray, title: str = "") -> str:
    """Nodal heatmap; ``values[i, j]`` is drawn with i to the right and j upward."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.size == 0:
        raise ValueError("heatmap needs a nonempty 2D array")
    ni, nj = values.shape
    side = 400
    cw, ch = side / ni, side / nj
    lo, hi = float(values.min()), float(values.max())
    vmax = max(abs(lo), abs(hi)) or 1.0
    ox, oy = 60, 50
    body = [f'<text x="{ox + side / 2}" y="30" text-anchor="middle" font-size="16">{title}</text>']
    for i in range(ni):
        for j in range(nj):
            color = _diverging(0.5 + 0.5 * values[i, j] / vmax)
            body.append(
                f'<rect class="node" x="{_num(ox + i * cw)}" y="{_num(oy + (nj - 1 - j) * ch)}" '
                f'width="{_num(cw + 0.01)}" height="{_num(ch + 0.01)}" fill="{color}"/>'
            )
    # legend
    lx = ox + side + 30
    steps = 50
    for k in range(steps):
        t = 1.0 - k / (steps - 1)
        body.append(
            f'<rect class="legend" x="{lx}" y="{_num(oy + k * side / steps)}" width="20" '
            f'height="{_num(side / steps + 0.01)}" fill="{_diverging(t)}"/>'
        )
    body.append(f'<text x="{lx + 26}" y="{oy + 10}" font-size="11">{vmax:+.3g}</text>')
    body.append(f'<text x="{lx + 26}" y="{oy + side / 2 + 4}" font-size="11">0</text>')
    body.append(f'<text x="{lx + 26}" y="{oy + side}" font-size="11">{-vmax:+.3g}</text>')
    return _svg_doc(body, width=ox + side + 110, height=oy + side + 30)


def emit_svg_plot(data, kind: str, path: str | Path, title: str = "") -> Path:
    """Write a log-log convergence plot or a 2D heatmap.

    ``kind="loglog-lines"`` takes a ConvergenceTable (or a ``{label: (n, err)}``
    mapping); ``kind="heatmap"`` takes a 2D nodal array.
    """
    if kind == "loglog-lines":
        series = data if isinstance(data, dict) else data.rms_series()
        text = loglog_svg(series, title)
    elif kind == "heatmap":
        text = heatmap_svg(data, title)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    path = Path(path)
    path.write_text(text)
    return path
