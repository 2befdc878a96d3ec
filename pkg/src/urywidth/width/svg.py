"""Minimal SVG drawing of the planar map used by the winding certificate."""
from __future__ import annotations

import numpy as np

__all__ = ["planar_image_svg", "reeb_svg"]


def _fmt(v: float) -> str:
    return f"{v:.4f}"


class _Canvas:
    def __init__(self, lo: np.ndarray, hi: np.ndarray, size: int = 480, pad: int = 16):
        span = np.maximum(hi - lo, 1e-9)
        self.s = (size - 2 * pad) / float(span.max())
        self.lo, self.pad = lo, pad
        self.w = int(round(span[0] * self.s)) + 2 * pad
        self.h = int(round(span[1] * self.s)) + 2 * pad
        self.items: list[str] = []

    def xy(self, p) -> tuple[str, str]:
        x = self.pad + (p[0] - self.lo[0]) * self.s
        y = self.h - self.pad - (p[1] - self.lo[1]) * self.s  # y up
        return _fmt(x), _fmt(y)

    def line(self, a, b, color: str, width: float = 1.0) -> None:
        (x1, y1), (x2, y2) = self.xy(a), self.xy(b)
        self.items.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}" stroke-width="{width}"/>')

    def dot(self, p, color: str, r: float = 1.2) -> None:
        x, y = self.xy(p)
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{r}" fill="{color}"/>')

    def circle(self, c, radius: float, color: str) -> None:
        x, y = self.xy(c)
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{_fmt(radius * self.s)}" fill="none" stroke="{color}" stroke-width="1.5"/>')

    def polygon(self, pts, color: str) -> None:
        s = " ".join(",".join(self.xy(p)) for p in pts)
        self.items.append(f'<polygon points="{s}" fill="{color}" fill-opacity="0.15" stroke="{color}"/>')

    def render(self, title: str) -> str:
        head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" viewBox="0 0 {self.w} {self.h}">'
        return "\n".join([head, f"<title>{title}</title>", *self.items, "</svg>"]) + "\n"


def planar_image_svg(
    f: np.ndarray,
    vertices: np.ndarray,
    boundary: np.ndarray,
    triangle: np.ndarray | None = None,
    disk: tuple[np.ndarray, float] | None = None,
    title: str = "planar image",
) -> str:
    """Images ``f[vertices]`` as dots, ``boundary`` segments ``(m, 2, 2)`` as
    black lines, plus the optional triangle and disk."""
    f = np.asarray(f, float)
    pts = f[np.asarray(vertices, dtype=np.int64)] if len(vertices) else np.zeros((0, 2))
    seg = np.asarray(boundary, float).reshape(-1, 2, 2)
    allp = [pts, seg.reshape(-1, 2)]
    if triangle is not None:
        allp.append(np.asarray(triangle, float))
    allp = np.concatenate([a for a in allp if len(a)], axis=0)
    c = _Canvas(allp.min(axis=0), allp.max(axis=0))
    if triangle is not None:
        c.polygon(np.asarray(triangle, float), "#1f5fbf")
    for p in pts:
        c.dot(p, "#999999")
    for a, b in seg:
        c.line(a, b, "#000000", 1.2)
    if disk is not None:
        c.circle(np.asarray(disk[0], float), float(disk[1]), "#c0392b")
    return c.render(title)


def reeb_svg(R, title: str = "reeb graph") -> str:
    """Reeb nodes at (component rank, shell) with edges; diameters as labels."""
    rank = np.zeros(R.n_nodes)
    for s in np.unique(R.shell_of):
        ids = np.flatnonzero(R.shell_of == s)
        rank[ids] = np.arange(len(ids))
    pos = np.stack([rank, R.shell_of.astype(float)], axis=1)
    c = _Canvas(pos.min(axis=0) - 0.5, pos.max(axis=0) + 0.5)
    for a, b in R.edges:
        c.line(pos[a], pos[b], "#555555")
    for j in range(R.n_nodes):
        c.dot(pos[j], "#1f5fbf", 3.0)
        x, y = c.xy(pos[j])
        c.items.append(f'<text x="{x}" y="{y}" dx="5" font-size="9">{float(R.diameters[j]):.3g}</text>')
    return c.render(title)
