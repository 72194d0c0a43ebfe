"""Self-contained SVG convergence plots, no external assets or libraries.

Renders log10 of the optimality gap against the iteration counter as one
polyline per series, with axes, decade ticks, a title, and a legend when
several series are drawn.
"""

from __future__ import annotations

import math

__all__ = ["convergence_svg"]

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, max_ticks: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / max_ticks)) if span > 0 else 1.0
    for mult in (1, 2, 5, 10, 20, 50):
        if span / (step * mult) <= max_ticks:
            step = step * mult
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * span:
        out.append(round(t, 12))
        t += step
    return out or [lo]


def convergence_svg(series, title: str = "convergence") -> str:
    """Build an SVG document from [(label, ks, gaps), ...]; gaps must be > 0."""
    cleaned = []
    for label, ks, gaps in series:
        pts = [(float(k), math.log10(float(g))) for k, g in zip(ks, gaps) if g > 0]
        if pts:
            cleaned.append((label, pts))
    if not cleaned:
        raise ValueError("nothing to plot: no positive gap values")

    xs = [p[0] for _, pts in cleaned for p in pts]
    ys = [p[1] for _, pts in cleaned for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]

    axis_style = 'stroke="black" stroke-width="1"'
    x_axis_y = MARGIN_T + plot_h
    parts.append(f'<line x1="{MARGIN_L}" y1="{x_axis_y}" x2="{MARGIN_L + plot_w}" y2="{x_axis_y}" {axis_style}/>')
    parts.append(f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{x_axis_y}" {axis_style}/>')

    for t in _ticks(x_lo, x_hi):
        px = sx(t)
        parts.append(f'<line x1="{px:.1f}" y1="{x_axis_y}" x2="{px:.1f}" y2="{x_axis_y + 5}" {axis_style}/>')
        parts.append(
            f'<text x="{px:.1f}" y="{x_axis_y + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        py = sy(t)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{py:.1f}" x2="{MARGIN_L}" y2="{py:.1f}" {axis_style}/>')
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">1e{t:g}</text>'
        )

    parts.append(
        f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">iteration k</text>'
    )
    parts.append(
        f'<text x="18" y="{MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {MARGIN_T + plot_h / 2:.1f})">f - f* (log scale)</text>'
    )

    for idx, (label, pts) in enumerate(cleaned):
        color = COLORS[idx % len(COLORS)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')

    if len(cleaned) > 1:
        for idx, (label, _) in enumerate(cleaned):
            color = COLORS[idx % len(COLORS)]
            ly = MARGIN_T + 14 + 16 * idx
            lx = MARGIN_L + plot_w - 150
            parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
            parts.append(
                f'<text x="{lx + 30}" y="{ly + 4}" font-family="sans-serif" font-size="12">{label}</text>'
            )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
