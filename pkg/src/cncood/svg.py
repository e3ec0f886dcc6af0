"""Minimal deterministic SVG emission (no timestamps, fixed formatting)."""

from __future__ import annotations

import numpy as np

# index 0 is the reject/OOD class color; 1..8 are ID class colors
CLASS_COLORS = (
    "#bbbbbb",
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)
OOD_COLOR = "#d11141"


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


class SvgCanvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts = []

    def polygon(self, pts, fill="none", stroke="black", stroke_width=1.0, opacity=None):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        extra = f' fill-opacity="{_fmt(opacity)}"' if opacity is not None else ""
        self.parts.append(
            f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{_fmt(stroke_width)}"{extra}/>'
        )

    def polyline(self, pts, stroke="black", stroke_width=1.5):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(stroke_width)}"/>'
        )

    def circle(self, x, y, r, fill="black"):
        self.parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{fill}"/>'
        )

    def text(self, x, y, s, size=14):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="sans-serif" '
            f'font-size="{size}">{s}</text>'
        )

    def rect(self, x, y, w, h, fill="white", stroke="none"):
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{fill}" stroke="{stroke}"/>'
        )

    def write(self, path):
        body = "\n".join(self.parts)
        doc = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
            f"{body}\n</svg>\n"
        )
        with open(path, "w") as fh:
            fh.write(doc)


class ViewMap:
    """Affine map from a data-domain box to pixel coordinates (y flipped)."""

    def __init__(self, domain, size: int, margin: int = 10):
        x0, y0, x1, y1 = domain
        span = max(x1 - x0, y1 - y0)
        self.scale = (size - 2 * margin) / span
        self.x0, self.y0, self.y1 = x0, y0, y1
        self.margin = margin

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        px = self.margin + (pts[:, 0] - self.x0) * self.scale
        py = self.margin + (self.y1 - pts[:, 1]) * self.scale
        return np.column_stack([px, py])


def class_color(label: int) -> str:
    return CLASS_COLORS[label % len(CLASS_COLORS)]
