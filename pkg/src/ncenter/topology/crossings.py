"""Self-intersections of polygonal loops and their sub-loop decomposition.

Positions along a loop of ``n`` nodes are real numbers in ``[0, n)``: node
``k`` sits at position ``k`` and segment ``k`` covers ``[k, k + 1)``.  A
transverse crossing of segments ``a < b`` at parameters ``t_a, t_b`` occupies
positions ``a + t_a`` and ``b + t_b`` and splits the loop into two sub-loops,
one over each of the two position intervals between them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..model import CenterSystem
from .invariants import LoopLike, genericity_tolerance, loop_nodes, winding_vector

__all__ = [
    "Crossing",
    "IntersectionReport",
    "NonGenericError",
    "SubLoop",
    "self_intersections",
    "subloops",
    "innermost_subloops",
    "arc_points",
    "signed_area",
]

_BLOCK = 256


class NonGenericError(ValueError):
    """Raised when a loop is not in general position; ``pairs`` lists segment pairs."""

    def __init__(self, message: str, pairs):
        super().__init__(message)
        self.pairs = list(pairs)


@dataclass(frozen=True)
class Crossing:
    """Transverse crossing of segments ``seg_a < seg_b``."""

    seg_a: int
    seg_b: int
    point: np.ndarray
    t_a: float
    t_b: float

    @property
    def positions(self) -> tuple[float, float]:
        return self.seg_a + self.t_a, self.seg_b + self.t_b


@dataclass(frozen=True)
class IntersectionReport:
    crossings: tuple = ()

    @property
    def count(self) -> int:
        return len(self.crossings)


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _point_segment_distance(p, a, b):
    ab = b - a
    den = np.sum(ab * ab, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(den > 0, np.sum((p - a) * ab, axis=-1) / den, 0.0)
    s = np.clip(s, 0.0, 1.0)
    return np.linalg.norm(p - (a + s[..., None] * ab), axis=-1)


def self_intersections(loop: LoopLike, check_generic: bool = True) -> IntersectionReport:
    """All transverse crossings between non-adjacent segments of a closed polygon.

    A pair crosses when each segment's endpoints lie strictly on opposite
    sides of the other segment's line.  With ``check_generic`` the loop must
    be in general position at tolerance ``1e-9`` times its diameter: no
    crossing within the tolerance of a segment end, no node within it of a
    non-adjacent segment, no doubled-back or zero-length segment.

    Raises
    ------
    NonGenericError
        Listing the offending segment pairs.
    """
    nodes = loop_nodes(loop)
    n = nodes.shape[0]
    a = nodes
    b = np.roll(nodes, -1, axis=0)
    d = b - a
    seg_len = np.linalg.norm(d, axis=1)
    eps = genericity_tolerance(nodes)
    bad: list = []
    if check_generic:
        for k in np.flatnonzero(seg_len < eps):
            bad.append((int(k), int(k)))
        nxt = np.roll(d, -1, axis=0)
        fold = (np.abs(_cross(d, nxt)) <= eps * (seg_len + np.roll(seg_len, -1))) & (np.sum(d * nxt, axis=1) < 0)
        for k in np.flatnonzero(fold):
            bad.append((int(k), int((k + 1) % n)))

    found = []
    for i0 in range(0, n, _BLOCK):
        i = np.arange(i0, min(n, i0 + _BLOCK))[:, None]
        j = np.arange(n)[None, :]
        mask = (j > i + 1) & ~((i == 0) & (j == n - 1))
        if not mask.any():
            continue
        ii, jj = np.nonzero(mask)
        ii = ii + i0
        jj = j[0, jj]
        d1, d2 = d[ii], d[jj]
        o1 = _cross(d1, a[jj] - a[ii])
        o2 = _cross(d1, b[jj] - a[ii])
        o3 = _cross(d2, a[ii] - a[jj])
        o4 = _cross(d2, b[ii] - a[jj])
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        if check_generic:
            near = np.minimum.reduce(
                [
                    _point_segment_distance(a[jj], a[ii], b[ii]),
                    _point_segment_distance(b[jj], a[ii], b[ii]),
                    _point_segment_distance(a[ii], a[jj], b[jj]),
                    _point_segment_distance(b[ii], a[jj], b[jj]),
                ]
            )
            for k in np.flatnonzero(near < eps):
                bad.append((int(ii[k]), int(jj[k])))
        k = np.flatnonzero(hit)
        if k.size == 0:
            continue
        ii, jj, d1, d2 = ii[k], jj[k], d1[k], d2[k]
        den = _cross(d1, d2)
        r = a[jj] - a[ii]
        ta = _cross(r, d2) / den
        tb = _cross(r, d1) / den
        found.extend(zip(ii.tolist(), jj.tolist(), ta.tolist(), tb.tolist()))

    if bad:
        bad = sorted(set(bad))
        raise NonGenericError(f"loop is not in general position at segment pairs {bad[:10]}", bad)
    crossings = tuple(
        Crossing(i, j, a[i] + ta * d[i], float(ta), float(tb)) for i, j, ta, tb in sorted(found)
    )
    return IntersectionReport(crossings)


def signed_area(points: np.ndarray) -> float:
    """Shoelace area of a closed polygon (positive when counter-clockwise)."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def arc_points(nodes: np.ndarray, start: float, end: float, p_start=None, p_end=None) -> np.ndarray:
    """Polyline of the loop from position ``start`` forward to ``end``.

    Contains the point at ``start``, every node strictly between, and the
    point at ``end``; ``end <= start`` wraps once around.  Explicit endpoint
    coordinates may be passed to avoid re-interpolation.
    """
    n = nodes.shape[0]
    if end <= start:
        end += n

    def at(pos):
        k = int(np.floor(pos)) % n
        t = pos - np.floor(pos)
        return nodes[k] + t * (nodes[(k + 1) % n] - nodes[k])

    first = int(np.floor(start)) + 1
    last = int(np.ceil(end)) - 1
    idx = np.arange(first, last + 1) % n
    ps = at(start) if p_start is None else np.asarray(p_start, float)
    pe = at(end) if p_end is None else np.asarray(p_end, float)
    return np.vstack([ps, nodes[idx], pe])


@dataclass(frozen=True)
class SubLoop:
    """Closed sub-loop from a crossing back to itself.

    ``start`` and ``end`` are loop positions (``end`` may exceed ``n``), the
    polygon is ``points`` (crossing point first, not repeated at the end).
    ``enclosed_centers`` holds 0-based indices of centers with nonzero
    winding.  ``crossing`` is ``None`` for a loop without crossings.
    """

    crossing: Optional[int]
    start: float
    end: float
    points: np.ndarray = field(repr=False)
    is_innermost: bool
    winding: np.ndarray = field(repr=False)
    enclosed_centers: frozenset
    area: float


def _inside(pos, lo, hi, n):
    """Positions strictly inside the cyclic interval ``(lo, hi)``, ``hi`` possibly above ``n``."""
    pos = np.asarray(pos, float)
    return ((pos > lo) & (pos < hi)) | ((pos + n > lo) & (pos + n < hi))


def subloops(loop: LoopLike, sys: CenterSystem, report: Optional[IntersectionReport] = None) -> list:
    """Both sub-loops at every crossing, or the loop itself when it is simple.

    A sub-loop is innermost (a Jordan curve) when no other crossing has both
    of its positions inside the sub-loop's interval.
    """
    nodes = loop_nodes(loop)
    n = nodes.shape[0]
    if report is None:
        report = self_intersections(nodes)
    if report.count == 0:
        w = winding_vector(nodes, sys)
        return [SubLoop(None, 0.0, float(n), nodes.copy(), True, w, _enclosed(w), abs(signed_area(nodes)))]
    pos = np.array([c.positions for c in report.crossings])
    out = []
    for ci, c in enumerate(report.crossings):
        p, q = c.positions
        for lo, hi in ((p, q), (q, p + n)):
            others = np.delete(pos, ci, axis=0)
            inside = _inside(others[:, 0], lo, hi, n) & _inside(others[:, 1], lo, hi, n)
            pts = arc_points(nodes, lo, hi, c.point, c.point)[:-1]
            w = winding_vector(pts, sys)
            out.append(SubLoop(ci, float(lo), float(hi), pts, not bool(inside.any()), w, _enclosed(w), abs(signed_area(pts))))
    return out


def _enclosed(w) -> frozenset:
    return frozenset(int(j) for j in np.flatnonzero(w))


def innermost_subloops(loop: LoopLike, sys: CenterSystem) -> list:
    """Sub-loops that are Jordan curves, each with the centers it encloses.

    Raises
    ------
    NonGenericError
        If the loop is not in general position.
    """
    return [s for s in subloops(loop, sys) if s.is_innermost]
