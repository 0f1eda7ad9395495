"""Potential, Lagrangian and discrete action of the planar N-center problem.

A test particle moves in the plane under the attraction of ``N`` fixed
centers with masses ``m_j`` at positions ``c_j``.  With force exponent
``alpha`` the (negative) potential is

    V(x) = sum_j m_j / (alpha * |x - c_j|**alpha)

and the motion obeys ``x'' = grad V(x)``.  Loops are discretized as closed
polygons sampled at uniform times; the action of a loop is the integral of
``|x'|**2 / 2 + V(x)`` over one period.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "CenterSystem",
    "PeriodicLoop",
    "OpenArc",
    "EnergyRecord",
    "SingularityError",
    "CollisionError",
    "potential",
    "grad_potential",
    "hessian_potential",
    "lagrangian",
    "action",
    "action_gradient",
    "kinetic_action",
    "arc_action",
    "loop_to_arc",
    "energy",
    "eom_residual",
    "min_center_distance",
    "segment_center_distances",
    "segments_sweep_point",
    "integrate_trajectory",
]

QUADRATURE_RULES = ("trapezoid", "midpoint")
COLLISION_REL_TOL = 1e-9


class SingularityError(ValueError):
    """Raised when the potential is evaluated on a center."""


class CollisionError(ValueError):
    """Raised when a node or segment of a discrete curve hits a center.

    ``index`` is the offending node or segment index (segment ``k`` joins
    node ``k`` to node ``k + 1``) and ``center`` the center index.
    """

    def __init__(self, message: str, index: int, center: int):
        super().__init__(message)
        self.index = index
        self.center = center


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CenterSystem:
    """Masses, positions and force exponent of the fixed centers."""

    masses: np.ndarray
    positions: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        masses = _frozen(np.atleast_1d(self.masses))
        positions = _frozen(np.atleast_2d(self.positions))
        if positions.shape != (masses.size, 2):
            raise ValueError(
                f"positions must have shape ({masses.size}, 2), got {positions.shape}"
            )
        if np.any(masses <= 0) or not np.all(np.isfinite(masses)):
            raise ValueError("all masses must be finite and strictly positive")
        if not (1.0 <= self.alpha < 2.0):
            raise ValueError(f"alpha must lie in [1, 2), got {self.alpha}")
        if masses.size > 1:
            d = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
            d[np.diag_indices_from(d)] = np.inf
            if d.min() <= 0:
                raise ValueError("center positions must be pairwise distinct")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n_centers(self) -> int:
        return self.masses.size

    @property
    def min_spacing(self) -> float:
        """Smallest distance between two centers (``inf`` for a single center)."""
        if self.n_centers < 2:
            return np.inf
        d = np.linalg.norm(self.positions[:, None] - self.positions[None, :], axis=-1)
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())

    @property
    def diameter(self) -> float:
        if self.n_centers < 2:
            return 0.0
        d = np.linalg.norm(self.positions[:, None] - self.positions[None, :], axis=-1)
        return float(d.max())

    def with_alpha(self, alpha: float) -> "CenterSystem":
        return CenterSystem(self.masses, self.positions, alpha)

    def scaled_masses(self, factor: float) -> "CenterSystem":
        return CenterSystem(self.masses * factor, self.positions, self.alpha)

    def rescaled(self, lam: float, center=None) -> "CenterSystem":
        """Blow-up of the configuration: ``c -> lam**(-2/(2+alpha)) (c - center) + center``."""
        center = np.zeros(2) if center is None else np.asarray(center, float)
        s = lam ** (-2.0 / (2.0 + self.alpha))
        return CenterSystem(self.masses, s * (self.positions - center) + center, self.alpha)


@dataclass(frozen=True)
class PeriodicLoop:
    """Closed polygon sampled at ``t_k = -T/2 + k T/n``; node ``n`` is node ``0``."""

    period: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("nodes must be an (n, 2) array")
        if nodes.shape[0] < 3:
            raise ValueError("a periodic loop needs at least 3 nodes")
        if not self.period > 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "period", float(self.period))

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def dt(self) -> float:
        return self.period / self.n

    @property
    def times(self) -> np.ndarray:
        return -self.period / 2 + self.dt * np.arange(self.n)

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of the ``n`` closing segments."""
        return self.nodes, np.roll(self.nodes, -1, axis=0)

    def length(self) -> float:
        a, b = self.segments()
        return float(np.linalg.norm(b - a, axis=1).sum())

    def shifted(self, k: int) -> "PeriodicLoop":
        return PeriodicLoop(self.period, np.roll(self.nodes, -k, axis=0))

    def reversed(self) -> "PeriodicLoop":
        return PeriodicLoop(self.period, self.nodes[::-1])

    def refined(self) -> "PeriodicLoop":
        """Node-doubling refinement: insert segment midpoints (same polygon)."""
        a, b = self.segments()
        out = np.empty((2 * self.n, 2))
        out[0::2] = a
        out[1::2] = 0.5 * (a + b)
        return PeriodicLoop(self.period, out)

    def translated(self, v) -> "PeriodicLoop":
        return PeriodicLoop(self.period, self.nodes + np.asarray(v, float))


@dataclass(frozen=True)
class OpenArc:
    """Time-sampled open curve with optional velocities."""

    times: np.ndarray
    points: np.ndarray
    velocities: Optional[np.ndarray] = None

    def __post_init__(self):
        times = _frozen(np.atleast_1d(self.times))
        points = _frozen(self.points)
        if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] != times.size:
            raise ValueError("points must be an (len(times), 2) array")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)
        if self.velocities is not None:
            vel = _frozen(self.velocities)
            if vel.shape != points.shape:
                raise ValueError("velocities must have the same shape as points")
            object.__setattr__(self, "velocities", vel)

    def __len__(self) -> int:
        return self.times.size

    def slice(self, mask) -> "OpenArc":
        vel = None if self.velocities is None else self.velocities[mask]
        return OpenArc(self.times[mask], self.points[mask], vel)


@dataclass(frozen=True)
class EnergyRecord:
    """Energy constant ``h`` of a sampled trajectory and its observed spread.

    ``scale`` is the mean potential along the samples; ``relative_drift``
    measures ``max_drift`` against it because ``h`` itself may vanish.
    """

    h: float
    max_drift: float
    scale: float = 1.0

    @property
    def relative_drift(self) -> float:
        return self.max_drift / self.scale


# ---------------------------------------------------------------------------
# point functions


def _offsets(p, sys: CenterSystem):
    p = np.asarray(p, dtype=float)
    d = p[..., None, :] - sys.positions  # (..., N, 2)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise SingularityError("evaluation at singularity: point coincides with a center")
    return p, d, r


def potential(p, sys: CenterSystem):
    """``sum_j m_j / (alpha |p - c_j|^alpha)``; vectorized over leading axes of ``p``."""
    _, _, r = _offsets(p, sys)
    a = sys.alpha
    return np.sum(sys.masses / (a * r**a), axis=-1)


def grad_potential(p, sys: CenterSystem):
    _, d, r = _offsets(p, sys)
    coef = sys.masses / r ** (sys.alpha + 2)
    return -np.sum(coef[..., None] * d, axis=-2)


def hessian_potential(p, sys: CenterSystem):
    """Hessian of ``V``, shape ``(..., 2, 2)``."""
    _, d, r = _offsets(p, sys)
    a = sys.alpha
    eye = np.eye(2)
    c1 = -sys.masses / r ** (a + 2)
    c2 = (a + 2) * sys.masses / r ** (a + 4)
    outer = d[..., :, None] * d[..., None, :]
    return np.sum(c1[..., None, None] * eye + c2[..., None, None] * outer, axis=-3)


def lagrangian(p, v, sys: CenterSystem):
    v = np.asarray(v, dtype=float)
    return 0.5 * np.sum(v * v, axis=-1) + potential(p, sys)


# ---------------------------------------------------------------------------
# collision geometry


def segment_center_distances(a: np.ndarray, b: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Distances from each center to each segment ``[a_k, b_k]``; shape ``(K, N)``."""
    ab = (b - a)[:, None, :]
    ac = centers[None, :, :] - a[:, None, :]
    denom = np.sum(ab * ab, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(denom > 0, np.sum(ac * ab, axis=-1) / denom, 0.0)
    s = np.clip(s, 0.0, 1.0)
    foot = a[:, None, :] + s[..., None] * ab
    return np.linalg.norm(centers[None, :, :] - foot, axis=-1)


def _collision_eps(points: np.ndarray, sys: CenterSystem) -> float:
    allp = np.vstack([points, sys.positions])
    scale = float(np.max(np.ptp(allp, axis=0)))
    return COLLISION_REL_TOL * max(scale, 1.0e-300)


def _check_segments(a, b, sys: CenterSystem):
    eps = _collision_eps(np.vstack([a, b]), sys)
    dist = segment_center_distances(a, b, sys.positions)
    k, j = np.unravel_index(np.argmin(dist), dist.shape)
    if dist[k, j] < eps:
        raise CollisionError(
            f"collision in quadrature: segment {k} passes within {dist[k, j]:.3g} of center {j}",
            int(k),
            int(j),
        )


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def segments_sweep_point(a0, b0, a1, b1, c) -> bool:
    """True if some segment ``[a, b]`` hits ``c`` while moving linearly from
    ``[a0, b0]`` to ``[a1, b1]``.  Endpoints are ``(m, 2)`` arrays or single points.

    The moving segment contains ``c`` only where ``cross(a(s) - c, b(s) - c)``
    vanishes, a quadratic in ``s``; each real root in ``[0, 1]`` is checked
    for ``c`` lying between the endpoints.
    """
    a0, b0, a1, b1 = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (a0, b0, a1, b1))
    c = np.asarray(c, dtype=float)
    p0, q0 = a0 - c, b0 - c
    dp, dq = a1 - a0, b1 - b0
    k0 = _cross(p0, q0)
    k1 = _cross(p0, dq) + _cross(dp, q0)
    k2 = _cross(dp, dq)
    lin = np.abs(k2) <= 1e-14 * (np.abs(k1) + np.abs(k0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s_lin = np.where(lin & (k1 != 0), -k0 / k1, np.nan)
        disc = k1 * k1 - 4 * k2 * k0
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        # numerically stable quadratic roots
        qv = -0.5 * (k1 + np.copysign(sq, k1))
        r1 = np.where(~lin, qv / k2, np.nan)
        r2 = np.where(~lin & (qv != 0), k0 / qv, np.nan)
    idx = []
    for s in (s_lin, r1, r2):
        ok = np.isfinite(s) & (s >= 0) & (s <= 1)
        idx.append((np.nonzero(ok)[0], s[ok]))
    # a segment already through c, or collapsing onto it, counts as a hit
    degenerate = k0 == 0
    idx.append((np.nonzero(degenerate)[0], np.zeros(int(degenerate.sum()))))
    for k, s in idx:
        if k.size == 0:
            continue
        p = p0[k] + s[:, None] * dp[k]
        q = q0[k] + s[:, None] * dq[k]
        # c is at the origin of the shifted frame: on [p, q] iff p.q <= 0
        if np.any(np.sum(p * q, axis=1) <= 0):
            return True
    return False


def min_center_distance(loop: PeriodicLoop, sys: CenterSystem) -> float:
    """Minimum over nodes and segment interiors of the distance to any center."""
    a, b = loop.segments()
    return float(segment_center_distances(a, b, sys.positions).min())


# ---------------------------------------------------------------------------
# action


def kinetic_action(loop: PeriodicLoop) -> float:
    """Exact kinetic integral of the piecewise-linear interpolant."""
    a, b = loop.segments()
    return float(np.sum((b - a) ** 2) / (2.0 * loop.dt))


def _potential_term(loop: PeriodicLoop, sys: CenterSystem, rule: str) -> float:
    if rule == "trapezoid":
        return float(loop.dt * np.sum(potential(loop.nodes, sys)))
    if rule == "midpoint":
        a, b = loop.segments()
        return float(loop.dt * np.sum(potential(0.5 * (a + b), sys)))
    raise ValueError(f"unknown quadrature rule {rule!r}; expected one of {QUADRATURE_RULES}")


def action(loop: PeriodicLoop, sys: CenterSystem, rule: str = "trapezoid") -> float:
    """Discrete action of a loop over one period.

    The kinetic part is integrated exactly on the polygon; the potential
    uses the trapezoid rule on nodes (default) or the midpoint rule on
    segments.  Both are second-order accurate.

    Raises
    ------
    CollisionError
        If a node or a segment passes through a center.
    """
    a, b = loop.segments()
    _check_segments(a, b, sys)
    return kinetic_action(loop) + _potential_term(loop, sys, rule)


def action_gradient(loop: PeriodicLoop, sys: CenterSystem, rule: str = "trapezoid") -> np.ndarray:
    """Gradient of :func:`action` with respect to node positions, shape ``(n, 2)``."""
    a, b = loop.segments()
    _check_segments(a, b, sys)
    x = loop.nodes
    dt = loop.dt
    g = (2 * x - np.roll(x, 1, axis=0) - np.roll(x, -1, axis=0)) / dt
    if rule == "trapezoid":
        return g + dt * grad_potential(x, sys)
    if rule == "midpoint":
        gm = grad_potential(0.5 * (a + b), sys)
        return g + 0.5 * dt * (gm + np.roll(gm, 1, axis=0))
    raise ValueError(f"unknown quadrature rule {rule!r}")


def arc_action(arc: OpenArc, sys: CenterSystem) -> float:
    """Action of a sampled open arc: exact polygon kinetic term, trapezoid potential."""
    dt = np.diff(arc.times)
    dx = np.diff(arc.points, axis=0)
    kin = np.sum(np.sum(dx * dx, axis=1) / (2 * dt))
    v = potential(arc.points, sys)
    return float(kin + np.sum(0.5 * (v[1:] + v[:-1]) * dt))


# ---------------------------------------------------------------------------
# energy and equation-of-motion diagnostics


def loop_to_arc(loop: PeriodicLoop) -> OpenArc:
    """Samples of a loop with periodic central-difference velocities."""
    x = loop.nodes
    v = (np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)) / (2 * loop.dt)
    return OpenArc(loop.times, x, v)


def energy(arc, sys: CenterSystem) -> EnergyRecord:
    """Energy ``|v|^2/2 - V`` along the samples; ``h`` is the median sample value."""
    if isinstance(arc, PeriodicLoop):
        arc = loop_to_arc(arc)
    if arc.velocities is None:
        raise ValueError("energy requires velocities")
    pot = potential(arc.points, sys)
    e = 0.5 * np.sum(arc.velocities**2, axis=1) - pot
    h = float(np.median(e))
    return EnergyRecord(h, float(np.max(np.abs(e - h))), float(np.mean(pot)))


def _second_derivative(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    h0 = (t[1:-1] - t[:-2])[:, None]
    h1 = (t[2:] - t[1:-1])[:, None]
    return 2 * (h0 * x[2:] - (h0 + h1) * x[1:-1] + h1 * x[:-2]) / (h0 * h1 * (h0 + h1))


def eom_residual(arc, sys: CenterSystem) -> float:
    """``max |x'' - grad V(x)|`` with ``x''`` from three-point differences.

    For an :class:`OpenArc` only interior samples are used; for a
    :class:`PeriodicLoop` every node has two neighbours.
    """
    if isinstance(arc, PeriodicLoop):
        x = arc.nodes
        acc = (np.roll(x, -1, axis=0) - 2 * x + np.roll(x, 1, axis=0)) / arc.dt**2
        return float(np.max(np.linalg.norm(acc - grad_potential(x, sys), axis=1)))
    if len(arc) < 3:
        raise ValueError("eom_residual needs at least 3 samples")
    acc = _second_derivative(arc.times, arc.points)
    res = acc - grad_potential(arc.points[1:-1], sys)
    return float(np.max(np.linalg.norm(res, axis=1)))


def integrate_trajectory(
    x0,
    v0,
    t_span: tuple[float, float],
    sys: CenterSystem,
    t_eval=None,
    rtol: float = 1e-12,
    atol: float = 1e-12,
) -> OpenArc:
    """Integrate ``x'' = grad V(x)`` with an 8th-order Dormand-Prince scheme.

    Integration stops with :class:`CollisionError` when the particle comes
    within ``COLLISION_REL_TOL`` times the center scale of a center, or when
    the step size collapses right beside one.
    """
    from scipy.integrate import solve_ivp

    scale = sys.min_spacing if np.isfinite(sys.min_spacing) else 1.0
    eps = COLLISION_REL_TOL * scale

    def rhs(t, u):
        return np.concatenate([u[2:], grad_potential(u[:2], sys)])

    def near(t, u):
        return float(np.min(np.linalg.norm(u[:2] - sys.positions, axis=1))) - eps

    near.terminal = True
    u0 = np.concatenate([np.asarray(x0, float), np.asarray(v0, float)])
    sol = solve_ivp(rhs, t_span, u0, method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval, events=near)
    if sol.status == 1:
        k = int(np.argmin(np.linalg.norm(sol.y_events[0][0][:2] - sys.positions, axis=1)))
        raise CollisionError(f"trajectory reached center {k} at t={sol.t_events[0][0]:.6g}", sol.t.size, k)
    if not sol.success:
        # the step size collapses on a fall into a center before the event fires
        d = np.linalg.norm(sol.y[:2, -1] - sys.positions, axis=1)
        k = int(np.argmin(d))
        if d[k] < 1e-3 * scale:
            raise CollisionError(f"trajectory reached center {k} near t={sol.t[-1]:.6g}", sol.t.size, k)
        raise RuntimeError(f"integration failed: {sol.message}")
    t, y = sol.t, sol.y
    if t_span[1] < t_span[0]:
        t, y = t[::-1], y[:, ::-1]
    return OpenArc(t, y[:2].T, y[2:].T)
