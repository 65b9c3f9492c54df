"""Dependency-free SVG rendering of diagrams and 2-D embeddings."""

from __future__ import annotations

import math
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .persistence import PersistenceDiagram

__all__ = ["diagram_svg", "scatter_svg", "SIZE", "MARGIN"]

SIZE = 400
MARGIN = 40
_PLOT = SIZE - 2 * MARGIN


def _num(x: float) -> str:
    return f"{x:.2f}"


def _header(title: str) -> list[str]:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{SIZE / 2}" y="{MARGIN / 2}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{escape(title)}</text>')
    return out


def _axes(xlabel: str, ylabel: str, ticks: Sequence[tuple[float, str]] = ()) -> list[str]:
    x0, y0, x1, y1 = MARGIN, SIZE - MARGIN, SIZE - MARGIN, MARGIN
    out = [
        '<g class="axes" stroke="black" stroke-width="1">',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>',
        '</g>',
    ]
    for frac, label in ticks:
        px = _num(MARGIN + frac * _PLOT)
        py = _num(SIZE - MARGIN - frac * _PLOT)
        out.append(f'<text x="{px}" y="{SIZE - MARGIN + 14}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">{label}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{py}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{label}</text>')
    out.append(f'<text x="{SIZE / 2}" y="{SIZE - 8}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="12" y="{SIZE / 2}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12" transform="rotate(-90 12 {SIZE / 2})">{escape(ylabel)}</text>')
    return out


def to_pixel(x: float, y: float) -> tuple[float, float]:
    """Map unit-square data coordinates to SVG pixels (y grows downward)."""
    return MARGIN + x * _PLOT, SIZE - MARGIN - y * _PLOT


def diagram_svg(diagram: PersistenceDiagram, title: str | None = None) -> str:
    """Persistence diagram on ``[0, 1]^2`` with the diagonal.

    Finite points are circles, essential points are squares; each marker
    carries a ``<title>`` with its birth vertex and coordinates. Infinite
    deaths are drawn on the top edge.
    """
    title = diagram.region_id if title is None else title
    out = _header(title)
    out += _axes("birth", "death", [(0.0, "0"), (0.5, "0.5"), (1.0, "1")])
    x0, y0 = to_pixel(0.0, 0.0)
    x1, y1 = to_pixel(1.0, 1.0)
    out.append(f'<line class="diagonal" x1="{_num(x0)}" y1="{_num(y0)}" x2="{_num(x1)}" '
               f'y2="{_num(y1)}" stroke="gray" stroke-dasharray="4 3"/>')
    for p in diagram.points:
        death = 1.0 if math.isinf(p.death) else min(p.death, 1.0)
        px, py = to_pixel(min(max(p.birth, 0.0), 1.0), death)
        label = escape(f"{p.birth_vertex or ''} ({p.birth:.4g}, "
                       f"{'inf' if math.isinf(p.death) else format(p.death, '.4g')})".strip())
        if p.essential:
            out.append(f'<rect class="point essential" x="{_num(px - 4)}" y="{_num(py - 4)}" '
                       f'width="8" height="8" fill="crimson"><title>{label}</title></rect>')
        else:
            out.append(f'<circle class="point" cx="{_num(px)}" cy="{_num(py)}" r="3.5" '
                       f'fill="steelblue"><title>{label}</title></circle>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_svg(ids: Sequence[str], coords, highlight: Iterable[str] = (),
                title: str = "") -> str:
    """Scatter of 2-D coordinates, one marker per id; ``highlight`` ids in red."""
    xy = np.asarray(coords, dtype=np.float64).reshape(len(ids), -1)[:, :2]
    hot = set(highlight)
    out = _header(title)
    out += _axes("x", "y")
    if len(ids):
        lo = xy.min(axis=0)
        span = xy.max(axis=0) - lo
        span[span == 0] = 1.0
        scale = float(span.max())
        centre = (xy.max(axis=0) + lo) / 2
        for rid, (x, y) in zip(ids, xy.tolist()):
            px, py = to_pixel(0.5 + (x - centre[0]) / scale, 0.5 + (y - centre[1]) / scale)
            colour = "crimson" if rid in hot else "steelblue"
            out.append(f'<circle class="point" cx="{_num(px)}" cy="{_num(py)}" r="3.5" '
                       f'fill="{colour}"><title>{escape(rid)}</title></circle>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
