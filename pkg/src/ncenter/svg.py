"""Minimal deterministic SVG rendering of planar curves and centers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = ["Curve", "render_svg", "write_svg"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass(frozen=True)
class Curve:
    points: np.ndarray
    closed: bool = False
    color: Optional[str] = None
    label: str = ""
    dashed: bool = False


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_svg(
    curves: Sequence[Curve],
    centers: Optional[np.ndarray] = None,
    masses: Optional[np.ndarray] = None,
    size: int = 480,
    margin: int = 24,
    title: str = "",
) -> str:
    """Polylines and center markers scaled to a square canvas with equal axes.

    The output depends only on the inputs: coordinates are printed with a
    fixed number of decimals and elements appear in input order.
    """
    pts = [np.asarray(c.points, float) for c in curves]
    if centers is not None and len(centers):
        pts.append(np.asarray(centers, float))
    allp = np.vstack(pts) if pts else np.zeros((1, 2))
    allp = allp[np.all(np.isfinite(allp), axis=1)]
    lo = allp.min(axis=0)
    hi = allp.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    mid = 0.5 * (lo + hi)
    scale = (size - 2 * margin) / span

    def xy(p):
        # SVG y grows downward
        return margin + (p[0] - mid[0]) * scale + (size - 2 * margin) / 2, margin + (mid[1] - p[1]) * scale + (size - 2 * margin) / 2

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{margin}" y="{margin - 8}" font-family="monospace" font-size="12">{_escape(title)}</text>')
    for i, c in enumerate(curves):
        p = np.asarray(c.points, float)
        p = p[np.all(np.isfinite(p), axis=1)]
        if p.shape[0] == 0:
            continue
        coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (xy(q) for q in p))
        tag = "polygon" if c.closed else "polyline"
        color = c.color or PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="4,3"' if c.dashed else ""
        out.append(f'<{tag} points="{coords}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>')
        if c.label:
            lx, ly = xy(p[0])
            out.append(f'<text x="{_fmt(lx + 4)}" y="{_fmt(ly - 4)}" font-family="monospace" font-size="10" fill="{color}">{_escape(c.label)}</text>')
    if centers is not None:
        m = np.ones(len(centers)) if masses is None else np.asarray(masses, float)
        rad = 3.0 + 3.0 * m / max(float(m.max()), 1e-300)
        for j, (c, r) in enumerate(zip(np.asarray(centers, float), rad)):
            cx, cy = xy(c)
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="black"/>')
            out.append(f'<text x="{_fmt(cx + r + 2)}" y="{_fmt(cy + r + 8)}" font-family="monospace" font-size="10">c{j + 1}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(path, *args, **kwargs) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(*args, **kwargs))
