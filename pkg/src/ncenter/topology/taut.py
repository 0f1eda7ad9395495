"""Removal of excess self-intersections by 1-gon and 2-gon surgery.

A generic loop with more crossings than its homotopy class requires has a
singular 1-gon (a sub-loop that is null-homotopic in the punctured plane) or
a singular 2-gon (two arcs between the same pair of crossings that together
bound a null-homotopic loop).  A 1-gon is deleted, leaving a corner at its
crossing.  A 2-gon is removed by swapping its two arcs, which keeps the
class and the traced point set; the two crossings become touching corners
that are then cut apart by short chamfers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..model import CenterSystem, PeriodicLoop
from .crossings import IntersectionReport, arc_points, self_intersections, signed_area, subloops
from .invariants import LoopLike, loop_nodes, winding_vector, homotopy_word

__all__ = [
    "NoSurgeryError",
    "TautResult",
    "find_monogons",
    "find_bigons",
    "remove_monogon",
    "remove_bigon",
    "make_taut",
]

CHAMFER_FRACTION = 0.25


class NoSurgeryError(ValueError):
    """Raised when the requested 1-gon or 2-gon does not exist."""


def _like(loop: LoopLike, nodes: np.ndarray):
    if isinstance(loop, PeriodicLoop):
        return PeriodicLoop(loop.period, nodes)
    return nodes


def _null_homotopic(points: np.ndarray, sys: CenterSystem) -> bool:
    if np.any(winding_vector(points, sys)):
        return False
    return homotopy_word(points, sys).is_trivial


@dataclass(frozen=True)
class _Monogon:
    area: float
    crossing: int
    start: float
    end: float


def find_monogons(loop: LoopLike, sys: CenterSystem, report: Optional[IntersectionReport] = None) -> list:
    """Null-homotopic sub-loops, smallest enclosed area first."""
    nodes = loop_nodes(loop)
    if report is None:
        report = self_intersections(nodes)
    if report.count == 0:
        return []
    out = []
    for s in subloops(nodes, sys, report):
        if not s.enclosed_centers and _null_homotopic(s.points, sys):
            out.append(_Monogon(s.area, s.crossing, s.start, s.end))
    return sorted(out, key=lambda m: (m.area, m.crossing, m.start))


def remove_monogon(loop: LoopLike, sys: CenterSystem):
    """Delete the smallest null-homotopic sub-loop.

    The class is unchanged and the crossing count drops by at least one.

    Raises
    ------
    NoSurgeryError
        If the loop has no singular 1-gon.
    """
    nodes = loop_nodes(loop)
    report = self_intersections(nodes)
    mono = find_monogons(nodes, sys, report)
    if not mono:
        raise NoSurgeryError("no singular 1-gon found")
    m = mono[0]
    x = report.crossings[m.crossing].point
    n = nodes.shape[0]
    keep = arc_points(nodes, m.end % n if m.end >= n else m.end, m.start, x, x)[:-1]
    return _like(loop, keep)


@dataclass(frozen=True)
class _Bigon:
    area: float
    x: int
    y: int
    k: int  # index of the first side among the four arcs
    same_direction: bool


def _events(report: IntersectionReport, x: int, y: int):
    ev = []
    for ci in (x, y):
        c = report.crossings[ci]
        for p in c.positions:
            ev.append((p, ci))
    ev.sort()
    return ev


def _arc(nodes, report, ev, k):
    """Arc ``k`` of the four arcs cut by the events, as a polyline."""
    (p0, c0), (p1, c1) = ev[k % 4], ev[(k + 1) % 4]
    if k % 4 == 3:
        p1 += nodes.shape[0]
    return arc_points(nodes, p0, p1, report.crossings[c0].point, report.crossings[c1].point)


def find_bigons(loop: LoopLike, sys: CenterSystem, report: Optional[IntersectionReport] = None) -> list:
    """Singular 2-gons, smallest enclosed area first.

    For each pair of crossings the four positions cut the loop into four
    arcs; arcs ``k`` and ``k + 2`` form a candidate when both join the two
    crossings, and a 2-gon when the loop they bound is null-homotopic.
    """
    nodes = loop_nodes(loop)
    if report is None:
        report = self_intersections(nodes)
    out = []
    m = report.count
    for x in range(m):
        for y in range(x + 1, m):
            ev = _events(report, x, y)
            for k in (0, 1):
                a_lab = (ev[k][1], ev[k + 1][1])
                b_lab = (ev[k + 2][1], ev[(k + 3) % 4][1])
                if a_lab[0] == a_lab[1] or b_lab[0] == b_lab[1]:
                    continue
                alpha = _arc(nodes, report, ev, k)
                beta = _arc(nodes, report, ev, k + 2)
                same = a_lab == b_lab
                back = beta[::-1] if same else beta
                poly = np.vstack([alpha[:-1], back[:-1]])
                if _null_homotopic(poly, sys):
                    out.append(_Bigon(abs(signed_area(poly)), x, y, k, same))
    return sorted(out, key=lambda b: (b.area, b.x, b.y, b.k))


def _chamfer(pieces: list) -> np.ndarray:
    """Join closed-chain pieces and cut each junction corner by a short chord."""
    body = [p[:-1] for p in pieces]
    nodes = np.vstack(body)
    junctions = np.cumsum([0] + [len(b) for b in body[:-1]])
    n = nodes.shape[0]
    a = nodes
    b = np.roll(nodes, -1, axis=0)
    repl = {}
    for j in junctions:
        p = nodes[j]
        prev = nodes[(j - 1) % n]
        nxt = nodes[(j + 1) % n]
        u = p - prev
        w = nxt - p
        lu, lw = np.linalg.norm(u), np.linalg.norm(w)
        # distance from the junction to segments not touching this location
        same = np.all(a == p, axis=1) | np.all(b == p, axis=1)
        ab = b - a
        den = np.sum(ab * ab, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.clip(np.where(den > 0, np.sum((p - a) * ab, axis=1) / den, 0.0), 0, 1)
        dist = np.linalg.norm(p - (a + s[:, None] * ab), axis=1)
        clear = np.min(dist[~same]) if np.any(~same) else np.inf
        eps = CHAMFER_FRACTION * min(lu, lw, clear)
        repl[int(j)] = np.vstack([p - eps * u / lu, p + eps * w / lw])
    out = []
    for i in range(n):
        out.append(repl[i] if i in repl else nodes[i : i + 1])
    return np.vstack(out)


def remove_bigon(loop: LoopLike, sys: CenterSystem):
    """Remove the smallest singular 2-gon by swapping its sides.

    With sides ``alpha`` and ``beta`` and connecting arcs ``g1``, ``g2`` the
    loop ``alpha g1 beta g2`` becomes ``beta g1 alpha g2`` (sides traversed
    the same way) or ``rev(beta) g1 rev(alpha) g2`` (opposite ways).  The
    crossing count drops by exactly two.

    Raises
    ------
    NoSurgeryError
        If the loop has no singular 2-gon.
    """
    nodes = loop_nodes(loop)
    report = self_intersections(nodes)
    big = find_bigons(nodes, sys, report)
    if not big:
        raise NoSurgeryError("no singular 2-gon found")
    bg = big[0]
    ev = _events(report, bg.x, bg.y)
    arcs = [_arc(nodes, report, ev, i) for i in range(4)]
    k = bg.k
    alpha, g1, beta, g2 = arcs[k], arcs[k + 1], arcs[(k + 2) % 4], arcs[(k + 3) % 4]
    if bg.same_direction:
        pieces = [beta, g1, alpha, g2]
    else:
        pieces = [beta[::-1], g1, alpha[::-1], g2]
    return _like(loop, _chamfer(pieces))


@dataclass(frozen=True)
class TautResult:
    loop: object
    monogons: int
    bigons: int
    crossings_before: int
    crossings_after: int


def make_taut(loop: LoopLike, sys: CenterSystem, max_surgeries: Optional[int] = None, details: bool = False):
    """Apply 1-gon and 2-gon surgeries until neither exists.

    1-gons are removed first, each time the one of smallest area.  Every
    surgery lowers the crossing count, so at most that many are needed; the
    result has no excess self-intersection.

    Raises
    ------
    RuntimeError
        If ``max_surgeries`` is exceeded.
    """
    nodes = loop_nodes(loop)
    report = self_intersections(nodes)
    start = report.count
    cap = start + 1 if max_surgeries is None else max_surgeries
    n_mono = n_big = 0
    while True:
        if report.count == 0:
            break
        mono = find_monogons(nodes, sys, report)
        if mono:
            nodes = loop_nodes(remove_monogon(nodes, sys))
            n_mono += 1
        else:
            if not find_bigons(nodes, sys, report):
                break
            nodes = loop_nodes(remove_bigon(nodes, sys))
            n_big += 1
        if n_mono + n_big > cap:
            raise RuntimeError("make_taut exceeded its surgery cap")
        report = self_intersections(nodes)
    out = loop if (n_mono + n_big) == 0 else _like(loop, nodes)
    if details:
        return TautResult(out, n_mono, n_big, start, report.count)
    return out
