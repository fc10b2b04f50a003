"""Plot data as CSV point lists and dependency-free SVG line charts."""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def write_points_csv(points, path, header=("fpr", "tpr")) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, y in points:
            w.writerow((repr(float(x)), repr(float(y))))


def write_roc_svg(series, path, title: str = "ROC", size: int = 420) -> None:
    """One polyline per (name, points) entry on the unit square, plus the chance diagonal."""
    pad = 48
    inner = size - 2 * pad

    def xy(fx, ty):
        return pad + fx * inner, size - pad - ty * inner

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 20 * len(series)}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="{size / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{pad}" y="{pad}" width="{inner}" height="{inner}" fill="none" stroke="#444"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        x, y = xy(tick, 0)
        parts.append(f'<text x="{x:.1f}" y="{y + 14:.1f}" text-anchor="middle">{tick:g}</text>')
        x, y = xy(0, tick)
        parts.append(f'<text x="{x - 6:.1f}" y="{y + 4:.1f}" text-anchor="end">{tick:g}</text>')
    parts.append(f'<text x="{size / 2}" y="{size - 10}" text-anchor="middle">false positive rate</text>')
    parts.append(f'<text x="14" y="{size / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {size / 2})">true positive rate</text>')
    (x0, y0), (x1, y1) = xy(0, 0), xy(1, 1)
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#aaa" stroke-dasharray="4 4"/>')
    for i, (name, points) in enumerate(series):
        colour = _PALETTE[i % len(_PALETTE)]
        coords = " ".join("{:.2f},{:.2f}".format(*xy(fx, ty)) for fx, ty in points)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        ly = size + 20 * i + 4
        parts.append(f'<line x1="{pad}" y1="{ly}" x2="{pad + 20}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        parts.append(f'<text x="{pad + 26}" y="{ly + 4}">{escape(name)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
