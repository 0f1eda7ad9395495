"""Homotopy invariants of polygonal loops: winding vectors and words."""
from __future__ import annotations

from typing import Union

import numpy as np

from ..model import CenterSystem, CollisionError, PeriodicLoop, segment_center_distances
from .words import HomotopyWord, reduce_word

__all__ = [
    "GP_REL_TOL",
    "DegenerateRayError",
    "loop_nodes",
    "genericity_tolerance",
    "winding_vector",
    "homotopy_word",
    "ray_direction",
    "ray_chamber",
]

GP_REL_TOL = 1e-9
RAY_RETRIES = 16
_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)

LoopLike = Union[PeriodicLoop, np.ndarray]


class DegenerateRayError(ValueError):
    """Raised when no ray direction avoids the loop nodes."""


def loop_nodes(loop: LoopLike) -> np.ndarray:
    if isinstance(loop, PeriodicLoop):
        return loop.nodes
    nodes = np.asarray(loop, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 2 or nodes.shape[0] < 2:
        raise ValueError("a loop needs an (n, 2) node array with n >= 2")
    return nodes


def genericity_tolerance(nodes: np.ndarray, extra: np.ndarray = None) -> float:
    """``GP_REL_TOL`` times the bounding-box diameter of the nodes (and ``extra``)."""
    pts = nodes if extra is None else np.vstack([nodes, extra])
    return GP_REL_TOL * max(float(np.hypot(*np.ptp(pts, axis=0))), 1e-300)


def _check_collision_free(nodes: np.ndarray, sys: CenterSystem) -> None:
    a, b = nodes, np.roll(nodes, -1, axis=0)
    eps = genericity_tolerance(nodes, sys.positions)
    dist = segment_center_distances(a, b, sys.positions)
    k, j = np.unravel_index(np.argmin(dist), dist.shape)
    if dist[k, j] < eps:
        raise CollisionError(f"winding ill-defined: segment {k} passes through center {j}", int(k), int(j))


def winding_vector(loop: LoopLike, sys: CenterSystem) -> np.ndarray:
    """Index of the loop about every center (integer array of length ``N``).

    Summed signed angle increments of ``x - c_j`` over the segments, divided
    by ``2 pi``.

    Raises
    ------
    CollisionError
        If a segment passes through a center.
    """
    nodes = loop_nodes(loop)
    _check_collision_free(nodes, sys)
    rel = nodes[:, None, :] - sys.positions[None]  # (n, N, 2)
    nxt = np.roll(rel, -1, axis=0)
    cross = rel[..., 0] * nxt[..., 1] - rel[..., 1] * nxt[..., 0]
    dot = np.sum(rel * nxt, axis=-1)
    total = np.arctan2(cross, dot).sum(axis=0) / (2 * np.pi)
    return np.rint(total).astype(int)


def _direction(delta: float) -> np.ndarray:
    """Unit vector turned by ``delta`` counter-clockwise from straight down."""
    return np.array([np.sin(delta), -np.cos(delta)])


def ray_chamber(sys: CenterSystem, angle_tol: float = 1e-9) -> tuple[float, float, float]:
    """Range ``(lo, hi)`` of ray angles sharing one free basis, and its base angle.

    Angles are measured counter-clockwise from straight down.  Turning the
    rays changes the generators only when a ray sweeps across another
    center, so all angles strictly between consecutive center-to-center
    directions read words in the same basis.  The base angle is 0 (straight
    down) unless a ray from one center points at another; then the basis is
    the one just counter-clockwise of down and the base angle lies inside it.
    """
    c = sys.positions
    w = (c[None, :, :] - c[:, None, :]).reshape(-1, 2)
    w = w[np.any(w != 0, axis=1)]
    crit = np.arctan2(w[:, 0], -w[:, 1]) if w.size else np.zeros(0)
    if np.any(np.abs(crit) <= angle_tol):
        lo = 0.0
        above = crit[crit > angle_tol]
        hi = float(above.min()) if above.size else np.pi
        return lo, hi, 0.5 * min(hi, 0.2)
    below = crit[crit < 0]
    above = crit[crit > 0]
    lo = float(below.max()) if below.size else -np.pi
    hi = float(above.min()) if above.size else np.pi
    return lo, hi, 0.0


def ray_direction(nodes: np.ndarray, sys: CenterSystem) -> np.ndarray:
    """Common direction of the word-reading rays, one from each center.

    The base direction of :func:`ray_chamber`, unless a ray passes within the
    genericity tolerance of a node; then the angle is moved in golden-ratio
    steps, up to ``RAY_RETRIES`` times, without leaving the chamber, so the
    basis of the word never depends on the loop.

    Raises
    ------
    DegenerateRayError
        If every candidate direction is degenerate.
    """
    eps = genericity_tolerance(nodes, sys.positions)
    lo, hi, base = ray_chamber(sys)
    a = max(lo, base - 0.3)
    b = min(hi, base + 0.3)
    for k in range(RAY_RETRIES + 1):
        delta = base if k == 0 else a + (0.05 + 0.9 * ((k * _GOLDEN) % 1.0)) * (b - a)
        d = _direction(delta)
        if _ray_ok(d, nodes, sys.positions, eps):
            return d
    raise DegenerateRayError("no generic ray direction found for reading the word")


def _ray_ok(d, nodes, centers, eps) -> bool:
    for pts, skip_self in ((nodes, False), (centers, True)):
        w = pts[:, None, :] - centers[None]  # (m, N, 2)
        u = d[0] * w[..., 1] - d[1] * w[..., 0]
        v = np.sum(w * d, axis=-1)
        bad = (np.abs(u) < eps) & (v > -eps)
        if skip_self:
            np.fill_diagonal(bad, False)
        if np.any(bad):
            return False
    return True


def homotopy_word(loop: LoopLike, sys: CenterSystem) -> HomotopyWord:
    """Cyclically reduced word of the loop's free homotopy class.

    Each center emits a ray in a common direction (see :func:`ray_direction`);
    the complement of the rays is simply connected, so the ordered sequence
    of signed ray crossings spells the class.  Crossing the ray of center
    ``j`` counter-clockwise about ``c_j`` gives the letter ``a<j>``.

    Raises
    ------
    CollisionError
        If a segment passes through a center.
    DegenerateRayError
        If no generic ray direction exists.
    """
    nodes = loop_nodes(loop)
    _check_collision_free(nodes, sys)
    d = ray_direction(nodes, sys)
    a = nodes[:, None, :] - sys.positions[None]  # (n, N, 2)
    b = np.roll(a, -1, axis=0)
    ua = d[0] * a[..., 1] - d[1] * a[..., 0]
    ub = d[0] * b[..., 1] - d[1] * b[..., 0]
    change = (ua < 0) != (ub < 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(change, ua / (ua - ub), 0.0)
    hit = a + s[..., None] * (b - a)
    along = np.sum(hit * d, axis=-1)
    k, j = np.nonzero(change & (along > 0))
    pos = k + s[k, j]
    sign = np.where(ua[k, j] < 0, 1, -1)
    order = np.lexsort((j, pos))
    return reduce_word([(int(j[i]) + 1, int(sign[i])) for i in order])
