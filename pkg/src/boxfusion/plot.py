"""Minimal SVG rendering of precision-recall curves."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .evaluation import PRCurve

WIDTH, HEIGHT = 480, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 56, 140, 20, 48
COLORS = ("#d62728", "#ff7f0e", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _x(r: float) -> float:
    return MARGIN_L + r * (WIDTH - MARGIN_L - MARGIN_R)


def _y(p: float) -> float:
    return HEIGHT - MARGIN_B - p * (HEIGHT - MARGIN_T - MARGIN_B)


def _num(v: float) -> str:
    return f"{v:.2f}"


def render_pr_svg(curves: Sequence[tuple[str, PRCurve]], path: str | Path | None = None) -> str:
    """Draw one polyline per named curve on unit recall/precision axes.

    Output depends only on the inputs, so identical curves give identical
    bytes.  Returns the SVG text and writes it to ``path`` when given.
    """
    if not curves:
        raise ValueError("no curves to render")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        '<g id="axes" stroke="black" stroke-width="1">',
        f'<line x1="{_num(_x(0))}" y1="{_num(_y(0))}" x2="{_num(_x(1))}" y2="{_num(_y(0))}"/>',
        f'<line x1="{_num(_x(0))}" y1="{_num(_y(0))}" x2="{_num(_x(0))}" y2="{_num(_y(1))}"/>',
        "</g>",
        '<g id="ticks">',
    ]
    for i in range(6):
        t = i / 5
        out.append(
            f'<text x="{_num(_x(t))}" y="{_num(_y(0) + 16)}" text-anchor="middle">{t:.1f}</text>'
        )
        out.append(
            f'<text x="{_num(_x(0) - 6)}" y="{_num(_y(t) + 4)}" text-anchor="end">{t:.1f}</text>'
        )
    out.append("</g>")
    out.append(
        f'<text x="{_num((_x(0) + _x(1)) / 2)}" y="{HEIGHT - 10}" text-anchor="middle">Recall</text>'
    )
    out.append(
        f'<text x="14" y="{_num((_y(0) + _y(1)) / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_num((_y(0) + _y(1)) / 2)})">Precision</text>'
    )
    out.append('<g id="curves" fill="none" stroke-width="1.5">')
    for i, (name, curve) in enumerate(curves):
        pts = " ".join(f"{_num(_x(r))},{_num(_y(p))}" for r, p in curve.points)
        out.append(
            f'<polyline class="pr-curve" data-name="{escape(name, {chr(34): "&quot;"})}" '
            f'stroke="{COLORS[i % len(COLORS)]}" points="{pts}"/>'
        )
    out.append("</g>")
    out.append('<g id="legend">')
    lx = _x(1) + 12
    for i, (name, _) in enumerate(curves):
        ly = MARGIN_T + 14 + 18 * i
        color = COLORS[i % len(COLORS)]
        out.append(
            f'<line x1="{_num(lx)}" y1="{_num(ly - 4)}" x2="{_num(lx + 18)}" y2="{_num(ly - 4)}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{_num(lx + 24)}" y="{_num(ly)}">{escape(name)}</text>')
    out.append("</g>")
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(svg, encoding="utf-8")
    return svg
