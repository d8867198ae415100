"""Deterministic standalone SVG plots: spectra, lattices, counting curves.

Byte-identical output across runs: no timestamps, fixed float formatting,
data rendered in sorted order.
"""

from __future__ import annotations

import math

from .errors import ConfigError

WIDTH, HEIGHT = 640.0, 480.0
MARGIN = 56.0


def _f(x: float) -> str:
    return f"{x:.3f}"


class _Axes:
    def __init__(self, xs, ys, xlabel, ylabel, title):
        if not xs or not ys:
            raise ConfigError("refusing to plot empty data")
        self.x0, self.x1 = min(xs), max(xs)
        self.y0, self.y1 = min(ys), max(ys)
        for lo_attr, hi_attr in (("x0", "x1"), ("y0", "y1")):
            lo, hi = getattr(self, lo_attr), getattr(self, hi_attr)
            pad = 0.05 * (hi - lo) if hi > lo else max(0.5, 0.1 * abs(hi) + 0.1)
            setattr(self, lo_attr, lo - pad)
            setattr(self, hi_attr, hi + pad)
        self.xlabel, self.ylabel, self.title = xlabel, ylabel, title

    def px(self, x):
        return MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def py(self, y):
        return HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * MARGIN)

    def frame(self):
        parts = [
            f'<rect x="{_f(MARGIN)}" y="{_f(MARGIN)}" width="{_f(WIDTH - 2 * MARGIN)}"'
            f' height="{_f(HEIGHT - 2 * MARGIN)}" fill="none" stroke="black"/>',
            f'<text x="{_f(WIDTH / 2)}" y="{_f(HEIGHT - 12)}" text-anchor="middle"'
            f' font-size="14">{self.xlabel}</text>',
            f'<text x="16" y="{_f(HEIGHT / 2)}" text-anchor="middle" font-size="14"'
            f' transform="rotate(-90 16 {_f(HEIGHT / 2)})">{self.ylabel}</text>',
            f'<text x="{_f(WIDTH / 2)}" y="28" text-anchor="middle"'
            f' font-size="15">{self.title}</text>',
        ]
        for k in range(5):
            xv = self.x0 + (self.x1 - self.x0) * k / 4
            yv = self.y0 + (self.y1 - self.y0) * k / 4
            parts.append(
                f'<line x1="{_f(self.px(xv))}" y1="{_f(HEIGHT - MARGIN)}"'
                f' x2="{_f(self.px(xv))}" y2="{_f(HEIGHT - MARGIN + 5)}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{_f(self.px(xv))}" y="{_f(HEIGHT - MARGIN + 18)}"'
                f' text-anchor="middle" font-size="11">{xv:.4g}</text>'
            )
            parts.append(
                f'<line x1="{_f(MARGIN - 5)}" y1="{_f(self.py(yv))}"'
                f' x2="{_f(MARGIN)}" y2="{_f(self.py(yv))}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{_f(MARGIN - 8)}" y="{_f(self.py(yv) + 4)}"'
                f' text-anchor="end" font-size="11">{yv:.4g}</text>'
            )
        return parts


def _document(body):
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(WIDTH)}"'
        f' height="{int(HEIGHT)}" viewBox="0 0 {int(WIDTH)} {int(HEIGHT)}">'
    )
    return head + "\n" + "\n".join(body) + "\n</svg>\n"


def scatter_svg(points, xlabel="Re", ylabel="Im", title="spectrum",
                lattice=None) -> str:
    """Scatter plot of complex points; optional lattice overlay as crosses."""
    pts = sorted((p.real, p.imag) for p in points)
    if not pts:
        raise ConfigError("refusing to plot empty data")
    lat = sorted((p.real, p.imag) for p in (lattice or []))
    xs = [p[0] for p in pts] + [p[0] for p in lat]
    ys = [p[1] for p in pts] + [p[1] for p in lat]
    ax = _Axes(xs, ys, xlabel, ylabel, title)
    body = ax.frame()
    for x, y in lat:
        cx, cy = ax.px(x), ax.py(y)
        body.append(
            f'<path d="M {_f(cx - 4)} {_f(cy)} H {_f(cx + 4)} M {_f(cx)} {_f(cy - 4)}'
            f' V {_f(cy + 4)}" stroke="#777777" fill="none"/>'
        )
    for x, y in pts:
        body.append(
            f'<circle cx="{_f(ax.px(x))}" cy="{_f(ax.py(y))}" r="3"'
            f' fill="#1f4e96"/>'
        )
    return _document(body)


def counting_svg(curve, title="counting function", loglog=True) -> str:
    """Counting curve N(r), log-log by default."""
    rs = [float(r) for r in curve.radii]
    ns = [int(c) for c in curve.counts]
    pairs = [(r, n) for r, n in zip(rs, ns) if (n > 0 or not loglog)]
    if not pairs:
        raise ConfigError("refusing to plot empty data")
    if loglog:
        data = [(math.log10(r), math.log10(max(n, 1))) for r, n in pairs]
        xlabel, ylabel = "log10 r", "log10 N(r)"
    else:
        data = [(r, float(n)) for r, n in pairs]
        xlabel, ylabel = "r", "N(r)"
    ax = _Axes([d[0] for d in data], [d[1] for d in data], xlabel, ylabel, title)
    body = ax.frame()
    path = " ".join(
        f"{'M' if i == 0 else 'L'} {_f(ax.px(x))} {_f(ax.py(y))}"
        for i, (x, y) in enumerate(data)
    )
    body.append(f'<path d="{path}" stroke="#a03030" fill="none" stroke-width="1.5"/>')
    for x, y in data:
        body.append(
            f'<circle cx="{_f(ax.px(x))}" cy="{_f(ax.py(y))}" r="2.5" fill="#a03030"/>'
        )
    return _document(body)
