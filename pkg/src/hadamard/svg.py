"""Minimal deterministic SVG rendering of chart-coordinate diagnostics.

Plots are drawn in chart coordinates (no metric-true rendering).  Numbers
are formatted with a fixed precision so identical inputs give identical
bytes.
"""

import numpy as np

PALETTE = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"]


def _f(v):
    return f"{v:.3f}"


class Canvas:
    def __init__(self, lo, hi, width=640, margin=40):
        self.lo = np.asarray(lo[:2], dtype=float)
        self.hi = np.asarray(hi[:2], dtype=float)
        span = self.hi - self.lo
        self.scale = (width - 2 * margin) / max(span[0], span[1])
        self.margin = margin
        self.width = int(round(span[0] * self.scale + 2 * margin))
        self.height = int(round(span[1] * self.scale + 2 * margin))
        self.items = []

    def xy(self, p):
        x = self.margin + (p[0] - self.lo[0]) * self.scale
        y = self.height - self.margin - (p[1] - self.lo[1]) * self.scale
        return x, y

    def line(self, a, b, color="#888", width=1.0, dash=None):
        (x1, y1), (x2, y2) = self.xy(a), self.xy(b)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{color}" stroke-width="{width}"{extra}/>')

    def polyline(self, pts, color="#000", width=1.5):
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in (self.xy(p) for p in pts))
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def dots(self, pts, color="#000", r=1.2):
        for p in pts:
            x, y = self.xy(p)
            self.items.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{r}" fill="{color}"/>')

    def circle(self, center, radius, color="#888", dash=None):
        x, y = self.xy(center)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(radius * self.scale)}" '
                          f'fill="none" stroke="{color}"{extra}/>')

    def cells(self, mask, lo, hi, color, opacity=0.5):
        """Shade the True cells of a 2-D boolean grid, one rect per row run."""
        nx, ny = mask.shape
        dx = (hi[0] - lo[0]) / max(nx - 1, 1)
        dy = (hi[1] - lo[1]) / max(ny - 1, 1)
        for j in range(ny):
            col = mask[:, j]
            i = 0
            while i < nx:
                if not col[i]:
                    i += 1
                    continue
                start = i
                while i < nx and col[i]:
                    i += 1
                x0, y1 = self.xy((lo[0] + (start - 0.5) * dx, lo[1] + (j + 0.5) * dy))
                x1, y0 = self.xy((lo[0] + (i - 0.5) * dx, lo[1] + (j - 0.5) * dy))
                self.items.append(
                    f'<rect x="{_f(x0)}" y="{_f(y1)}" width="{_f(x1 - x0)}" '
                    f'height="{_f(y0 - y1)}" fill="{color}" fill-opacity="{opacity}"/>')

    def text(self, p, s, size=12):
        x, y = self.xy(p)
        self.items.append(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" '
                          f'font-family="monospace">{s}</text>')

    def axes(self, model_kind=None):
        lo, hi = self.lo, self.hi
        if lo[1] <= 0 <= hi[1]:
            self.line((lo[0], 0), (hi[0], 0), "#bbb")
        if lo[0] <= 0 <= hi[0]:
            self.line((0, lo[1]), (0, hi[1]), "#bbb")
        if model_kind == "hyperbolic-half-plane":
            self.line((lo[0], max(lo[1], 0.0)), (hi[0], max(lo[1], 0.0)), "#c00", 1.5, "4 3")
        elif model_kind == "hyperbolic-disk":
            self.circle((0.0, 0.0), 1.0, "#c00", "4 3")

    def render(self):
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        body = "\n".join(self.items)
        return f'{head}\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
