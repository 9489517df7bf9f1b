"""Minimal self-contained SVG emission for probe traces.

One 800x300 px panel per probe, each series normalized to its own maximum so
differently-scaled species share the panel. No plotting dependency.
"""

from __future__ import annotations

from typing import List, Tuple

from .transport import Trace

PANEL_W = 800
PANEL_H = 300
MARGIN_L = 60
MARGIN_R = 12
MARGIN_T = 28
MARGIN_B = 34

_COLORS = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_trace_svg(trace: Trace) -> str:
    probes: List[str] = []
    for p, _ in trace.columns:
        if p not in probes:
            probes.append(p)
    total_h = PANEL_H * len(probes)
    t = trace.times
    t0, t1 = float(t[0]), float(t[-1])
    span = (t1 - t0) or 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" '
        f'height="{total_h}" viewBox="0 0 {PANEL_W} {total_h}">',
        f'<rect width="{PANEL_W}" height="{total_h}" fill="white"/>',
    ]
    for row, probe in enumerate(probes):
        oy = row * PANEL_H
        x0, x1 = MARGIN_L, PANEL_W - MARGIN_R
        y0, y1 = oy + PANEL_H - MARGIN_B, oy + MARGIN_T
        parts.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x0}" y="{oy + 18}" font-family="sans-serif" '
            f'font-size="13">probe {probe} (normalized concentration)</text>'
        )
        for frac in (0.0, 0.5, 1.0):
            tx = x0 + frac * (x1 - x0)
            label = t0 + frac * span
            parts.append(
                f'<text x="{_fmt(tx)}" y="{y0 + 16}" font-family="sans-serif" '
                f'font-size="11" text-anchor="middle">{label:.2f}s</text>'
            )
        for frac in (0.0, 0.5, 1.0):
            ty = y0 + frac * (y1 - y0)
            parts.append(
                f'<text x="{x0 - 6}" y="{_fmt(ty + 4)}" font-family="sans-serif" '
                f'font-size="11" text-anchor="end">{frac:.1f}</text>'
            )
        keys = [(p, s) for p, s in trace.columns if p == probe]
        for ci, key in enumerate(keys):
            series = trace.series[key]
            peak = float(abs(series).max()) or 1.0
            pts = []
            for i in range(len(t)):
                px = x0 + (float(t[i]) - t0) / span * (x1 - x0)
                py = y0 + (float(series[i]) / peak) * (y1 - y0)
                pts.append(f"{_fmt(px)},{_fmt(py)}")
            color = _COLORS[ci % len(_COLORS)]
            parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )
            parts.append(
                f'<text x="{x1 - 8 - 70 * ci}" y="{oy + 18}" '
                f'font-family="sans-serif" font-size="12" fill="{color}" '
                f'text-anchor="end">{key[1]}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_trace_svg(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_trace_svg(trace))
