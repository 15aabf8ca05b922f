"""SVG heatmaps and dendrograms, plus matrix export.

Output is plain SVG 1.1 text assembled in a fixed order with fixed number
formatting, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .cluster import Dendrogram
from .errors import InputFileError, ValidationError
from .relations import SimilarityMatrix

RGB = tuple[int, int, int]

DEFAULT_RAMP: tuple[tuple[float, RGB], ...] = (
    (-1.0, (255, 255, 255)),
    (1.0, (8, 48, 107)),
)


@dataclass(frozen=True)
class RenderStyle:
    color_ramp: tuple[tuple[float, RGB], ...] = DEFAULT_RAMP
    cell_size: float = 18.0
    label_font_size: float = 10.0
    show_values: bool = False
    highlight_boxes: tuple = ()  # ((row0, row1), (col0, col1), rgb), half-open ranges
    value_range: str = "observed"  # or "absolute"
    separator_color: RGB = (200, 30, 30)

    def __post_init__(self):
        anchors = [a for a, _ in self.color_ramp]
        if len(anchors) < 2 or any(b <= a for a, b in zip(anchors, anchors[1:])):
            raise ValidationError("color ramp anchors must be strictly increasing (at least two stops)")
        if anchors[0] != -1.0 or anchors[-1] != 1.0:
            raise ValidationError("color ramp anchors must span exactly [-1, 1]")
        if not self.cell_size > 0:
            raise ValidationError("cell_size must be positive")
        if self.value_range not in ("observed", "absolute"):
            raise ValidationError("value_range must be 'observed' or 'absolute'")


def ramp_color(value: float, ramp=DEFAULT_RAMP) -> RGB:
    """Linear interpolation between ramp stops; values outside [-1, 1] clamp."""
    v = min(1.0, max(-1.0, float(value)))
    for (a0, c0), (a1, c1) in zip(ramp, ramp[1:]):
        if v == a0:
            return tuple(c0)
        if v < a1:
            t = (v - a0) / (a1 - a0)
            return tuple(int(round(x0 + t * (x1 - x0))) for x0, x1 in zip(c0, c1))
    return tuple(ramp[-1][1])


def _hex(rgb: RGB) -> str:
    return "#%02x%02x%02x" % tuple(rgb)


def _num(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _scaled(values: np.ndarray, mode: str) -> np.ndarray:
    if mode == "absolute" or values.size == 0:
        return values
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.ones_like(values)
    return -1.0 + 2.0 * (values - lo) / (hi - lo)


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise InputFileError(f"cannot write {path}: {exc}") from exc


def _text_width(label: str, font: float) -> float:
    return 0.6 * font * len(label)


def heatmap_svg(matrix: SimilarityMatrix, style: RenderStyle = RenderStyle()) -> str:
    values = matrix.values
    nr, nc = values.shape
    if nr == 0 or nc == 0:
        raise ValidationError("cannot render an empty matrix")
    cs, fs = style.cell_size, style.label_font_size
    rows, cols = matrix.row_labels, matrix.col_labels
    left = 10 + max(_text_width(r, fs) for r in rows)
    top = 10 + max(_text_width(c, fs) for c in cols)
    width = left + nc * cs + 10
    height = top + nr * cs + 10
    scaled = _scaled(values, style.value_range)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(width)}" '
        f'height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}">',
        f'<g font-family="sans-serif" font-size="{_num(fs)}">',
    ]
    out.append('<g class="cells" stroke="none">')
    for i in range(nr):
        for j in range(nc):
            out.append(
                f'<rect x="{_num(left + j * cs)}" y="{_num(top + i * cs)}" width="{_num(cs)}" '
                f'height="{_num(cs)}" fill="{_hex(ramp_color(scaled[i, j], style.color_ramp))}">'
                f"<title>{escape(rows[i])} / {escape(cols[j])}: {values[i, j]:.4f}</title></rect>"
            )
    out.append("</g>")
    if style.show_values:
        out.append('<g class="values" text-anchor="middle" font-size="{}">'.format(_num(fs * 0.8)))
        for i in range(nr):
            for j in range(nc):
                fill = "#ffffff" if scaled[i, j] > 0.3 else "#000000"
                out.append(
                    f'<text x="{_num(left + (j + 0.5) * cs)}" y="{_num(top + (i + 0.5) * cs + fs * 0.3)}" '
                    f'fill="{fill}">{values[i, j]:.2f}</text>'
                )
        out.append("</g>")
    out.append('<g class="row-labels" text-anchor="end">')
    for i, lab in enumerate(rows):
        out.append(f'<text x="{_num(left - 4)}" y="{_num(top + (i + 0.5) * cs + fs * 0.35)}">{escape(lab)}</text>')
    out.append("</g>")
    out.append('<g class="col-labels" text-anchor="start">')
    for j, lab in enumerate(cols):
        x, y = left + (j + 0.5) * cs + fs * 0.35, top - 4
        out.append(f'<text x="{_num(x)}" y="{_num(y)}" transform="rotate(-90 {_num(x)} {_num(y)})">{escape(lab)}</text>')
    out.append("</g>")
    sep = _hex(style.separator_color)
    out.append(f'<g class="separators" stroke="{sep}" stroke-width="1.5">')
    if matrix.row_clusters is not None:
        for i in range(1, nr):
            if matrix.row_clusters[i] != matrix.row_clusters[i - 1]:
                y = _num(top + i * cs)
                out.append(f'<line x1="{_num(left)}" y1="{y}" x2="{_num(left + nc * cs)}" y2="{y}"/>')
    if matrix.col_clusters is not None:
        for j in range(1, nc):
            if matrix.col_clusters[j] != matrix.col_clusters[j - 1]:
                x = _num(left + j * cs)
                out.append(f'<line x1="{x}" y1="{_num(top)}" x2="{x}" y2="{_num(top + nr * cs)}"/>')
    out.append("</g>")
    out.append('<g class="highlights" fill="none" stroke-width="2">')
    for (r0, r1), (c0, c1), rgb in style.highlight_boxes:
        out.append(
            f'<rect x="{_num(left + c0 * cs)}" y="{_num(top + r0 * cs)}" width="{_num((c1 - c0) * cs)}" '
            f'height="{_num((r1 - r0) * cs)}" stroke="{_hex(rgb)}"/>'
        )
    out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_heatmap(matrix: SimilarityMatrix, style: RenderStyle = RenderStyle(), path=None) -> str:
    """Draw one colored cell per value, labels, cluster separators and highlight boxes."""
    svg = heatmap_svg(matrix, style)
    if path is not None:
        _write(path, svg)
    return svg


@dataclass(frozen=True)
class DendrogramLayout:
    leaf_order: list[int]
    x: np.ndarray  # per node, leaves then merges
    y: np.ndarray  # merge height per node, 0 for leaves


def dendrogram_layout(dendrogram: Dendrogram, spacing: float = 10.0) -> DendrogramLayout:
    """Leaf ``i`` of the traversal sits at ``(i + 0.5) * spacing``; a merge sits midway between its children."""
    n = dendrogram.n_leaves
    order = dendrogram.leaf_order()
    x = np.zeros(2 * n - 1)
    y = np.zeros(2 * n - 1)
    for pos, leaf in enumerate(order):
        x[leaf] = (pos + 0.5) * spacing
    for i, m in enumerate(dendrogram.merges):
        x[n + i] = 0.5 * (x[m.left] + x[m.right])
        y[n + i] = m.height
    return DendrogramLayout(order, x, y)


def dendrogram_svg(dendrogram: Dendrogram, style: RenderStyle = RenderStyle()) -> str:
    fs = style.label_font_size
    spacing = max(style.cell_size, fs * 1.2)
    lay = dendrogram_layout(dendrogram, spacing)
    n = dendrogram.n_leaves
    labels = dendrogram.leaf_labels
    plot_h = 200.0
    label_h = 10 + max(_text_width(lab, fs) for lab in labels)
    top, left = 10.0, 10.0
    width = left + n * spacing + 10
    height = top + plot_h + label_h
    hmax = float(lay.y.max()) or 1.0

    def py(h):
        return top + plot_h * (1.0 - h / hmax)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(width)}" '
        f'height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}">',
        f'<g font-family="sans-serif" font-size="{_num(fs)}">',
        '<g class="branches" fill="none" stroke="#222222" stroke-width="1">',
    ]
    for i, m in enumerate(dendrogram.merges):
        xl, xr = left + lay.x[m.left], left + lay.x[m.right]
        yl, yr, yp = py(lay.y[m.left]), py(lay.y[m.right]), py(m.height)
        out.append(
            f'<path d="M{_num(xl)} {_num(yl)} V{_num(yp)} H{_num(xr)} V{_num(yr)}">'
            f"<title>node {n + i}: height {m.height:.4f}, size {m.size}</title></path>"
        )
    out.append("</g>")
    out.append('<g class="leaf-labels" text-anchor="end">')
    base = top + plot_h + 4
    for leaf in lay.leaf_order:
        x = left + lay.x[leaf] + fs * 0.35
        out.append(
            f'<text x="{_num(x)}" y="{_num(base)}" transform="rotate(-90 {_num(x)} {_num(base)})">'
            f"{escape(labels[leaf])}</text>"
        )
    out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_dendrogram(dendrogram: Dendrogram, style: RenderStyle = RenderStyle(), path=None) -> str:
    """Rectangular dendrogram with leaves along the bottom and height growing upward."""
    svg = dendrogram_svg(dendrogram, style)
    if path is not None:
        _write(path, svg)
    return svg


def matrix_to_delimited(matrix: SimilarityMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    corner = f"{matrix.row_category}\\{matrix.col_category}" if matrix.row_category else ""
    w.writerow([corner, *matrix.col_labels])
    for lab, row in zip(matrix.row_labels, matrix.values):
        w.writerow([lab, *(format(float(v), ".17g") for v in row)])
    return buf.getvalue()


def export_matrix(matrix: SimilarityMatrix, path, format: str = "json") -> None:
    """Write ``delimited`` (CSV, 17 significant digits) or ``json`` (full structure)."""
    if format == "delimited":
        _write(path, matrix_to_delimited(matrix))
    elif format == "json":
        _write(path, json.dumps(matrix.to_json(), indent=1, ensure_ascii=False) + "\n")
    else:
        raise ValidationError(f"unknown export format {format!r}; use 'delimited' or 'json'")


def import_matrix(path) -> SimilarityMatrix:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputFileError(f"cannot read matrix {path}: {exc}") from exc
    return SimilarityMatrix.from_json(data)
