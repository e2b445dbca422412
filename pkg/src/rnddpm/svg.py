"""Minimal hand-emitted SVG line/marker plots (no plotting dependency)."""

from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 420
MARGIN = 56


def _finite(values):
    return [v for v in values if v is not None and math.isfinite(v)]


class LinePlot:
    """A single-axes plot with polyline/marker series and a legend."""

    def __init__(self, title: str, x_label: str, y_label: str):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.series = []  # (xs, ys, color, label, style)

    def add_line(self, xs, ys, color: str, label: str):
        self.series.append((list(xs), list(ys), color, label, "line"))

    def add_markers(self, xs, ys, color: str, label: str):
        self.series.append((list(xs), list(ys), color, label, "markers"))

    def add_dashed(self, xs, ys, color: str, label: str):
        self.series.append((list(xs), list(ys), color, label, "dashed"))

    def render(self) -> str:
        xs_all, ys_all = [], []
        for xs, ys, *_ in self.series:
            xs_all += _finite(xs)
            ys_all += _finite(ys)
        if not xs_all or not ys_all:
            xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
        x_lo, x_hi = min(xs_all), max(xs_all)
        y_lo, y_hi = min(ys_all), max(ys_all)
        if x_hi == x_lo:
            x_hi = x_lo + 1.0
        if y_hi == y_lo:
            y_hi = y_lo + 1.0
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

        def sx(x):
            return MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2 * MARGIN)

        def sy(y):
            return HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2 * MARGIN)

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="15">{self.title}</text>',
        ]
        # axes
        x0, y0 = MARGIN, HEIGHT - MARGIN
        parts.append(
            f'<path d="M {x0} {MARGIN} L {x0} {y0} L {WIDTH - MARGIN} {y0}" '
            'stroke="black" fill="none"/>'
        )
        for i in range(5):
            xv = x_lo + i * (x_hi - x_lo) / 4
            yv = y_lo + i * (y_hi - y_lo) / 4
            parts.append(
                f'<text x="{sx(xv):.1f}" y="{y0 + 18}" text-anchor="middle" '
                f'font-size="11">{xv:.4g}</text>'
            )
            parts.append(
                f'<text x="{x0 - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end" '
                f'font-size="11">{yv:.5g}</text>'
            )
        parts.append(
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-size="12">{self.x_label}</text>'
        )
        parts.append(
            f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 16 {HEIGHT / 2})">{self.y_label}</text>'
        )

        for idx, (xs, ys, color, label, style) in enumerate(self.series):
            pts = [(sx(x), sy(y)) for x, y in zip(xs, ys)
                   if math.isfinite(x) and math.isfinite(y)]
            if style in ("line", "dashed") and len(pts) >= 2:
                d = "M " + " L ".join(f"{px:.1f} {py:.1f}" for px, py in pts)
                dash = ' stroke-dasharray="6 4"' if style == "dashed" else ""
                parts.append(f'<path d="{d}" stroke="{color}" fill="none" stroke-width="1.5"{dash}/>')
            if style == "markers":
                for px, py in pts:
                    parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="3.5" fill="{color}"/>')
            # legend
            ly = MARGIN + 16 * idx
            parts.append(
                f'<rect x="{WIDTH - MARGIN - 130}" y="{ly - 8}" width="12" height="8" fill="{color}"/>'
            )
            parts.append(
                f'<text x="{WIDTH - MARGIN - 112}" y="{ly}" font-size="11">{label}</text>'
            )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"
