"""Static SVG rendering for sweep heatmaps, RB decay curves and density
matrix bars.

Hand-rolled on purpose: the CSV and JSON artifacts are the source of truth
and these files only need to be readable in a browser, so a few hundred
lines of string assembly beat a plotting dependency.  Layout constants are
pixel values chosen by eye.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

_GRADIENT = (
    (0.00, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.50, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.00, (253, 231, 37)),
)


def _color(value: float) -> str:
    """Hex color on a dark-to-bright gradient; NaN renders grey."""
    if not math.isfinite(value):
        return "#b0b0b0"
    v = min(max(value, 0.0), 1.0)
    for (x0, c0), (x1, c1) in zip(_GRADIENT, _GRADIENT[1:]):
        if v <= x1:
            f = 0.0 if x1 == x0 else (v - x0) / (x1 - x0)
            rgb = tuple(round(a + f * (b - a)) for a, b in zip(c0, c1))
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#fde725"


def _fmt(x: float) -> str:
    if x == 0:
        return "0"
    if abs(x) >= 1e4 or abs(x) < 1e-2:
        return f"{x:.3g}"
    return f"{x:.4g}"


def _text(x, y, s, size=11, anchor="middle", rotate=None) -> str:
    extra = f' transform="rotate({rotate} {x:.1f} {y:.1f})"' if rotate else ""
    return (
        f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" '
        f'font-family="sans-serif" text-anchor="{anchor}"{extra}>{s}</text>'
    )


def _document(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    background = f'<rect width="{width}" height="{height}" fill="white"/>'
    return "\n".join([head, background, *body, "</svg>"]) + "\n"


def heatmap_svg(
    panels: list[tuple[str, np.ndarray]],
    x_values,
    y_values,
    x_label: str,
    y_label: str,
    vmin: float = 0.0,
    vmax: float = 1.0,
) -> str:
    """Side-by-side heatmap panels over a shared grid plus one colorbar.

    Each panel is (title, grid) with grid[i, j] mapping y_values[i] (rows)
    and x_values[j] (columns); row 0 is drawn at the bottom.
    """
    cell_w, cell_h = 22, 22
    nx, ny = len(x_values), len(y_values)
    panel_w, panel_h = nx * cell_w, ny * cell_h
    margin_l, margin_t, gap = 70, 40, 30
    width = margin_l + len(panels) * (panel_w + gap) + 70
    height = margin_t + panel_h + 60
    body: list[str] = []
    span = vmax - vmin or 1.0
    for k, (title, grid) in enumerate(panels):
        ox = margin_l + k * (panel_w + gap)
        oy = margin_t
        body.append(_text(ox + panel_w / 2, oy - 12, title, size=13))
        for i in range(ny):
            for j in range(nx):
                v = (grid[i, j] - vmin) / span
                x = ox + j * cell_w
                y = oy + (ny - 1 - i) * cell_h
                body.append(
                    f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                    f'fill="{_color(v)}"/>'
                )
        body.append(
            f'<rect x="{ox}" y="{oy}" width="{panel_w}" height="{panel_h}" '
            f'fill="none" stroke="black" stroke-width="1"/>'
        )
        body.append(_text(ox, oy + panel_h + 16, _fmt(x_values[0]), anchor="start"))
        body.append(_text(ox + panel_w, oy + panel_h + 16, _fmt(x_values[-1]), anchor="end"))
        body.append(_text(ox + panel_w / 2, oy + panel_h + 34, x_label))
        if k == 0:
            body.append(_text(ox - 6, oy + panel_h, _fmt(y_values[0]), anchor="end"))
            body.append(_text(ox - 6, oy + 10, _fmt(y_values[-1]), anchor="end"))
            body.append(
                _text(ox - 46, oy + panel_h / 2, y_label, rotate=-90)
            )
    # colorbar
    bar_x = margin_l + len(panels) * (panel_w + gap)
    steps = 40
    step_h = panel_h / steps
    for s in range(steps):
        v = 1.0 - s / (steps - 1)
        body.append(
            f'<rect x="{bar_x}" y="{margin_t + s * step_h:.1f}" width="14" '
            f'height="{step_h + 0.5:.1f}" fill="{_color(v)}"/>'
        )
    body.append(_text(bar_x + 18, margin_t + 10, _fmt(vmax), anchor="start"))
    body.append(_text(bar_x + 18, margin_t + panel_h, _fmt(vmin), anchor="start"))
    return _document(width, height, body)


def decay_svg(
    title: str,
    series: list[dict],
    curves: list[dict] | None = None,
    x_label: str = "sequence length",
    y_label: str = "population",
) -> str:
    """Scatter with error bars plus optional smooth overlay curves.

    series entries: {label, x, y, err, color}; curves entries:
    {label, x, y, color} drawn as polylines (fit overlays).
    """
    width, height = 560, 400
    ox, oy, pw, ph = 70, 40, 440, 300
    all_y = np.concatenate(
        [np.asarray(s["y"], dtype=float) for s in series]
        + [np.asarray(c["y"], dtype=float) for c in (curves or [])]
    )
    lo = max(0.0, float(np.nanmin(all_y)) - 0.05)
    hi = min(1.05, float(np.nanmax(all_y)) + 0.05)
    if hi - lo < 0.1:
        lo, hi = max(0.0, hi - 0.1), hi
    xmax = max(float(np.max(np.asarray(s["x"], dtype=float))) for s in series)
    xmax = max(xmax, 1.0)

    def px(x):
        return ox + pw * x / xmax

    def py(y):
        return oy + ph * (1.0 - (y - lo) / (hi - lo))

    body = [
        _text(ox + pw / 2, oy - 14, title, size=14),
        f'<rect x="{ox}" y="{oy}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="black" stroke-width="1"/>',
        _text(ox + pw / 2, oy + ph + 34, x_label),
        _text(ox - 50, oy + ph / 2, y_label, rotate=-90),
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        yv = lo + frac * (hi - lo)
        body.append(_text(ox - 6, py(yv) + 4, f"{yv:.2f}", anchor="end", size=10))
        xv = frac * xmax
        body.append(_text(px(xv), oy + ph + 14, _fmt(xv), size=10))
    for c in curves or []:
        pts = " ".join(
            f"{px(x):.1f},{py(y):.1f}" for x, y in zip(c["x"], c["y"])
        )
        body.append(
            f'<polyline points="{pts}" fill="none" stroke="{c["color"]}" '
            f'stroke-width="1.5" stroke-dasharray="5,3"/>'
        )
    for s in series:
        color = s["color"]
        errs = s.get("err")
        for i, (x, y) in enumerate(zip(s["x"], s["y"])):
            cx, cy = px(x), py(y)
            if errs is not None and errs[i] > 0:
                y0, y1 = py(y - errs[i]), py(y + errs[i])
                body.append(
                    f'<line x1="{cx:.1f}" y1="{y0:.1f}" x2="{cx:.1f}" '
                    f'y2="{y1:.1f}" stroke="{color}" stroke-width="1"/>'
                )
            body.append(
                f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="3" fill="{color}"/>'
            )
    legend_y = oy + 14
    for item in [*series, *(curves or [])]:
        body.append(
            f'<rect x="{ox + pw - 150}" y="{legend_y - 9}" width="10" height="10" '
            f'fill="{item["color"]}"/>'
        )
        body.append(
            _text(ox + pw - 135, legend_y, item["label"], anchor="start", size=10)
        )
        legend_y += 16
    return _document(width, height, body)


def bars_svg(title: str, labels: list[str], values, vmax: float | None = None) -> str:
    """Labeled vertical bars, e.g. density-matrix element magnitudes."""
    values = np.asarray(values, dtype=float)
    vmax = vmax if vmax is not None else max(float(values.max()), 1e-9)
    n = len(labels)
    bar_w, gap = 24, 8
    ox, oy, ph = 50, 40, 260
    width = ox + n * (bar_w + gap) + 30
    height = oy + ph + 60
    body = [
        _text(ox + (n * (bar_w + gap)) / 2, oy - 14, title, size=14),
        f'<line x1="{ox}" y1="{oy + ph}" x2="{ox + n * (bar_w + gap)}" '
        f'y2="{oy + ph}" stroke="black"/>',
        _text(ox - 8, oy + 8, _fmt(vmax), anchor="end", size=10),
        _text(ox - 8, oy + ph, "0", anchor="end", size=10),
    ]
    for i, (label, v) in enumerate(zip(labels, values)):
        h = ph * min(max(v / vmax, 0.0), 1.0)
        x = ox + i * (bar_w + gap)
        body.append(
            f'<rect x="{x}" y="{oy + ph - h:.1f}" width="{bar_w}" '
            f'height="{h:.1f}" fill="#3b528b"/>'
        )
        body.append(
            _text(x + bar_w / 2, oy + ph + 12, label, size=9, rotate=45)
        )
    return _document(width, height, body)


def write_svg(path: str | Path, content: str) -> Path:
    path = Path(path)
    if not content.startswith("<svg"):
        raise ValueError("not an svg document")
    path.write_text(content)
    return path
