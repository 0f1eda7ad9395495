"""The one-center (Kepler-type) problem.

Everything here concerns a single center of mass ``m1`` at a point ``c``
(the origin unless stated) with potential ``m1 / (alpha |x - c|**alpha)``:

* parabolic collision-ejection motions and their closed-form action,
* the blow-up rescaling ``x -> lam**(-2/(2+alpha)) x(lam t)``, which fixes
  those motions, together with a measurement of how the action scales,
* the Maupertuis product functional and its time rescaling to solutions,
* minimization of fixed-end arcs, with or without a disk obstacle, and
* the angle swept by a zero-energy arc grazing a circle.

Discrete arcs use the same conventions as :mod:`ncenter.model`: exact
polygon kinetic term, trapezoid rule for the potential.  One-center arcs are
optimized in polar coordinates, where keeping every segment's angle
increment inside ``(-pi, pi)`` is exactly the condition that no segment
sweeps across the center, so the prescribed winding is preserved.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, sparse
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from .descent import lbfgs_descent
from .model import CenterSystem, OpenArc, arc_action

__all__ = [
    "ParabolicEjection",
    "ObstacleSpec",
    "MaupertuisRecord",
    "ScalingFit",
    "BlowupTable",
    "FixedEndResult",
    "ObstacleResult",
    "SweepRow",
    "parabolic_point",
    "parabolic_velocity",
    "parabolic_arc",
    "ejection_action",
    "lambda_rescale",
    "action_scaling",
    "blowup_convergence",
    "maupertuis",
    "maupertuis_to_solution",
    "angular_momentum",
    "obstacle_minimize",
    "angular_sweep",
    "angular_sweep_arcsin_ratio",
    "grazing_arc_sweep_numeric",
    "total_grazing_sweep",
    "sweep_table",
    "write_sweep_csv",
    "fixed_end_minimize",
]

CONTACT_RTOL = 1e-8


def _blowup_exponent(alpha: float) -> float:
    return 2.0 / (2.0 + alpha)


@dataclass(frozen=True)
class ParabolicEjection:
    """Zero-energy motion falling into the center along the ray at angle
    ``phi_minus`` for ``t < 0`` and leaving along ``phi_plus`` for ``t > 0``."""

    m1: float
    alpha: float
    phi_minus: float = 0.0
    phi_plus: float = 0.0

    def __post_init__(self):
        if not self.m1 > 0:
            raise ValueError("m1 must be positive")
        if not (1.0 <= self.alpha < 2.0):
            raise ValueError(f"alpha must lie in [1, 2), got {self.alpha}")
        if abs(self.phi_plus - self.phi_minus) > 2 * np.pi + 1e-12:
            raise ValueError("|phi_plus - phi_minus| must not exceed 2 pi")

    @property
    def mu(self) -> float:
        return (self.alpha + 2.0) * np.sqrt(self.m1 / (2.0 * self.alpha))

    @property
    def delta_phi(self) -> float:
        return self.phi_plus - self.phi_minus

    def radius(self, t):
        return (self.mu * np.abs(t)) ** _blowup_exponent(self.alpha)

    def system(self, center=(0.0, 0.0)) -> CenterSystem:
        return CenterSystem([self.m1], [center], self.alpha)


def _angle_of(pe: ParabolicEjection, t):
    return np.where(np.asarray(t) < 0, pe.phi_minus, pe.phi_plus)


def parabolic_point(pe: ParabolicEjection, t, center=(0.0, 0.0)) -> np.ndarray:
    """Position on the collision (``t <= 0``) or ejection (``t > 0``) ray."""
    t = np.asarray(t, dtype=float)
    r = pe.radius(t)
    ang = _angle_of(pe, t)
    out = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)
    return out + np.asarray(center, float)


def parabolic_velocity(pe: ParabolicEjection, t) -> np.ndarray:
    """Velocity of :func:`parabolic_point`; infinite at ``t = 0``."""
    t = np.asarray(t, dtype=float)
    beta = _blowup_exponent(pe.alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        speed = beta * pe.mu**beta * np.abs(t) ** (beta - 1.0) * np.sign(t)
    ang = _angle_of(pe, t)
    return np.stack([speed * np.cos(ang), speed * np.sin(ang)], axis=-1)


def parabolic_arc(pe: ParabolicEjection, T: float, n: int, center=(0.0, 0.0)) -> OpenArc:
    """Samples of the parabolic motion on ``[-T, T]`` at ``n`` uniform times.

    Use an even ``n`` to keep the collision instant out of the samples.
    """
    t = np.linspace(-T, T, n)
    return OpenArc(t, parabolic_point(pe, t, center), parabolic_velocity(pe, t))


def ejection_action(pe: ParabolicEjection, T: float) -> float:
    """Action of the parabolic motion on ``[-T, T]`` in closed form.

    On a zero-energy motion the Lagrangian equals ``|x'|**2``; integrating
    ``(beta mu**beta t**(beta-1))**2`` with ``beta = 2/(2+alpha)`` over both
    half-intervals gives ``8 mu**(2 beta) T**(2 beta - 1) / ((2+alpha)(2-alpha))``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    a = pe.alpha
    return float(8.0 * pe.mu ** (4.0 / (2 + a)) * T ** ((2 - a) / (2 + a)) / ((2 + a) * (2 - a)))


# ---------------------------------------------------------------------------
# blow-up rescaling


def lambda_rescale(arc: OpenArc, lam: float, center=(0.0, 0.0), alpha: float = 1.0) -> OpenArc:
    """Blow-up ``x_lam(t) = lam**(-2/(2+alpha)) (x(lam t) - c) + c``.

    Sample times are divided by ``lam``; velocities pick up the factor
    ``lam**(alpha/(2+alpha))``.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    c = np.asarray(center, float)
    beta = _blowup_exponent(alpha)
    pts = lam ** (-beta) * (arc.points - c) + c
    vel = None if arc.velocities is None else lam ** (1.0 - beta) * arc.velocities
    return OpenArc(arc.times / lam, pts, vel)


@dataclass(frozen=True)
class ScalingFit:
    """Power-law fit ``A(x_lam) / A(x) = C lam**exponent``."""

    exponent: float
    log_prefactor: float
    r_squared: float
    lambdas: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    alpha: float = 1.0

    @property
    def homogeneity_exponent(self) -> float:
        """``-(2-alpha)/(2+alpha)``: kinetic and potential terms both scale this way."""
        return -(2.0 - self.alpha) / (2.0 + self.alpha)

    @property
    def position_exponent(self) -> float:
        """``-2/(2+alpha)``: the factor applied to positions, not to the action."""
        return -2.0 / (2.0 + self.alpha)

    def agreement(self, tol: float = 1e-6) -> dict:
        return {
            "homogeneity": abs(self.exponent - self.homogeneity_exponent) < tol,
            "position": abs(self.exponent - self.position_exponent) < tol,
        }


def action_scaling(
    arc: OpenArc, sys: CenterSystem, lambdas: Sequence[float], center=(0.0, 0.0)
) -> ScalingFit:
    """Measure how the action changes under :func:`lambda_rescale`.

    The rescaled arc is evaluated against the center configuration rescaled
    about the same point, and ``log(ratio)`` is fitted linearly in ``log(lam)``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    a0 = arc_action(arc, sys)
    ratios = np.array(
        [
            arc_action(lambda_rescale(arc, lam, center, sys.alpha), sys.rescaled(lam, center)) / a0
            for lam in lambdas
        ]
    )
    x = np.log(lambdas)
    y = np.log(ratios)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(intercept), float(r2), lambdas, ratios, sys.alpha)


@dataclass
class BlowupTable:
    """Distances between blow-ups of a colliding arc and the limiting parabolic motion."""

    lambdas: np.ndarray
    sup_distance: np.ndarray
    velocity_distance: np.ndarray
    phi_minus: float
    phi_plus: float
    collision_time: float

    def rows(self):
        return list(zip(self.lambdas, self.sup_distance, self.velocity_distance))

    def decreasing(self) -> bool:
        """Whether the position distance shrinks from the first to the last lambda."""
        return bool(self.sup_distance[-1] < self.sup_distance[0])


def _side_spline(tau, values):
    order = np.argsort(tau)
    tau, values = tau[order], values[order]
    keep = np.concatenate([[True], np.diff(tau) > 0])
    return CubicSpline(tau[keep], values[keep], axis=0)


def blowup_convergence(
    y: OpenArc,
    pe: ParabolicEjection,
    lambdas: Sequence[float],
    T: float,
    center=(0.0, 0.0),
    n_eval: int = 401,
    collision_tol: float = 1e-6,
) -> BlowupTable:
    """Compare blow-ups ``y_lam`` of an arc through a collision with the parabolic limit.

    The collision is the sample nearest the center.  The limiting ray angles
    are read off the samples adjacent to it, and ``m1`` and ``alpha`` come
    from ``pe``.  Positions are compared on ``[-T, T]``, velocities on
    ``T/4 <= |t| <= T``.  Each ``lam * T`` must fit inside the sampled
    time range on both sides of the collision.

    Raises
    ------
    ValueError
        If no sample lies within ``collision_tol`` (relative to the arc's
        extent) of the center.
    """
    c = np.asarray(center, float)
    rel = y.points - c
    dist = np.hypot(rel[:, 0], rel[:, 1])
    i0 = int(np.argmin(dist))
    if dist[i0] > collision_tol * max(dist.max(), 1e-300) or i0 in (0, len(y) - 1):
        raise ValueError("no interior collision with the center found in the arc")
    t0 = y.times[i0]
    phi_m = float(np.arctan2(rel[i0 - 1, 1], rel[i0 - 1, 0]))
    phi_p = float(np.arctan2(rel[i0 + 1, 1], rel[i0 + 1, 0]))
    phi_p = phi_m + np.angle(np.exp(1j * (phi_p - phi_m)))
    limit = ParabolicEjection(pe.m1, pe.alpha, phi_m, phi_p)
    beta = _blowup_exponent(pe.alpha)

    t_rel = y.times - t0
    # in tau = |t|**beta the colliding arc is close to linear, which suits splines
    sides = {}
    for sgn, mask in ((-1, t_rel <= 0), (1, t_rel >= 0)):
        tau = np.abs(t_rel[mask]) ** beta
        pos = _side_spline(tau, rel[mask])
        vel = None
        if y.velocities is not None:
            vmask = mask & (t_rel != 0)
            vel = _side_spline(np.abs(t_rel[vmask]) ** beta, y.velocities[vmask])
        sides[sgn] = (pos, vel, np.abs(t_rel[mask]).max())

    t = np.linspace(-T, T, n_eval)
    far = np.abs(t) >= T / 4
    ref = parabolic_point(limit, t)
    ref_v = parabolic_velocity(limit, t[far])
    sup_d, vel_d = [], []
    for lam in lambdas:
        pts = np.empty((t.size, 2))
        vels = np.full((t.size, 2), np.nan)
        for sgn in (-1, 1):
            pos, vel, reach = sides[sgn]
            m = (np.sign(t) == sgn) | ((t == 0) & (sgn == 1))
            if lam * T > reach * (1 + 1e-12):
                raise ValueError(f"lam={lam} needs samples beyond the arc's time range")
            tau = (lam * np.abs(t[m])) ** beta
            pts[m] = lam ** (-beta) * pos(tau)
            if vel is not None:
                vels[m] = lam ** (1.0 - beta) * vel(tau)
        sup_d.append(np.max(np.linalg.norm(pts - ref, axis=1)))
        vel_d.append(
            np.max(np.linalg.norm(vels[far] - ref_v, axis=1)) if y.velocities is not None else np.nan
        )
    return BlowupTable(
        np.asarray(lambdas, float), np.array(sup_d), np.array(vel_d), phi_m, float(phi_p), float(t0)
    )


# ---------------------------------------------------------------------------
# Maupertuis functional


@dataclass(frozen=True)
class MaupertuisRecord:
    """Product ``value = kinetic * potential`` with ``omega**2 = potential / kinetic``.

    ``kinetic`` is the integral of ``|y'|**2 / 2`` and ``potential`` the
    integral of ``V + h`` over the arc.
    """

    value: float
    omega: float
    h: float
    kinetic: float
    potential: float


def _maupertuis_parts(arc: OpenArc, h: float, sys: CenterSystem):
    from .model import potential

    dt = np.diff(arc.times)
    dx = np.diff(arc.points, axis=0)
    kin = float(np.sum(np.sum(dx * dx, axis=1) / (2 * dt)))
    v = potential(arc.points, sys) + h
    pot = float(np.sum(0.5 * (v[1:] + v[:-1]) * dt))
    return kin, pot


def maupertuis(arc: OpenArc, h: float, m1: float, alpha: float, center=(0.0, 0.0)) -> MaupertuisRecord:
    """Evaluate the Maupertuis product of an arc at energy ``h``.

    Raises
    ------
    ValueError
        If the integral of ``V + h`` is not positive (``omega`` undefined) or
        the arc is stationary.
    """
    sys = CenterSystem([m1], [center], alpha)
    kin, pot = _maupertuis_parts(arc, h, sys)
    if not pot > 0:
        raise ValueError("integral of V + h is not positive; omega is undefined")
    if not kin > 0:
        raise ValueError("arc has zero kinetic integral")
    return MaupertuisRecord(kin * pot, float(np.sqrt(pot / kin)), float(h), kin, pot)


def _maupertuis_gradient(arc: OpenArc, h: float, sys: CenterSystem):
    from .model import grad_potential

    t, x = arc.times, arc.points
    dt = np.diff(t)
    kin, pot = _maupertuis_parts(arc, h, sys)
    gk = np.zeros_like(x)
    d = np.diff(x, axis=0) / dt[:, None]
    gk[:-1] -= d
    gk[1:] += d
    w = np.zeros(t.size)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    gp = w[:, None] * grad_potential(x, sys)
    return pot * gk, kin * gp


def maupertuis_to_solution(
    arc: OpenArc,
    record: MaupertuisRecord,
    m1: float,
    alpha: float,
    center=(0.0, 0.0),
    tol: float = 1e-4,
    contact_radius: Optional[float] = None,
) -> OpenArc:
    """Time-rescale a critical arc ``y`` of the Maupertuis product into a solution.

    The result is ``x(t) = y(omega t)``, defined on the original interval
    divided by ``omega``.  Criticality is checked on interior nodes: the
    gradient of the product, relative to the size of its kinetic part, must
    stay below ``tol``.  Nodes within ``contact_radius`` of the center are
    exempt in the radial direction, where an obstacle reaction acts.

    Raises
    ------
    ValueError
        If the arc is not critical.
    """
    sys = CenterSystem([m1], [center], alpha)
    gk, gp = _maupertuis_gradient(arc, record.h, sys)
    g = (gk + gp)[1:-1]
    if contact_radius is not None:
        rel = arc.points[1:-1] - np.asarray(center, float)
        r = np.hypot(rel[:, 0], rel[:, 1])
        on = r <= contact_radius * (1 + CONTACT_RTOL)
        radial = rel[on] / r[on, None]
        g[on] -= np.sum(g[on] * radial, axis=1)[:, None] * radial
    scale = np.max(np.linalg.norm(gk[1:-1], axis=1))
    crit = np.max(np.linalg.norm(g, axis=1)) / scale
    if crit > tol:
        raise ValueError(f"arc is not critical: relative gradient {crit:.3g} > {tol:.3g}")
    om = record.omega
    vel = om * np.gradient(arc.points, arc.times, axis=0, edge_order=2)
    return OpenArc(arc.times / om, arc.points, vel)


# ---------------------------------------------------------------------------
# polar minimization of one-center arcs


class _Radius:
    """Map unconstrained variables to radii obeying ``rho <= r (<= rho_bar)``."""

    def __init__(self, rho: Optional[float], rho_bar: Optional[float]):
        self.rho = rho
        self.rho_bar = rho_bar

    def __call__(self, u):
        if self.rho is None:
            return u, np.ones_like(u), np.zeros_like(u)
        if self.rho_bar is None:
            return self.rho + u * u, 2 * u, 2 * np.ones_like(u)
        w = self.rho_bar - self.rho
        return self.rho + w * np.sin(u) ** 2, w * np.sin(2 * u), 2 * w * np.cos(2 * u)

    def inverse(self, r):
        if self.rho is None:
            return r
        if self.rho_bar is None:
            return np.sqrt(r - self.rho)
        return np.arcsin(np.sqrt((r - self.rho) / (self.rho_bar - self.rho)))


class _PolarArc:
    """Discrete one-center arc with fixed endpoints in polar coordinates.

    ``kind`` selects the fixed-time action (``"action"``) or the Maupertuis
    product (``"maupertuis"``).  Variables are the transformed radii of the
    ``n - 1`` interior nodes followed by their continuous angles.
    """

    def __init__(self, kind, r_ends, th_ends, T, n, m1, alpha, h=0.0, rho=None, rho_bar=None):
        self.kind = kind
        self.r_ends = r_ends
        self.th_ends = th_ends
        self.T = T
        self.n = n
        self.m = n - 1
        self.dt = 2.0 * T / n
        self.m1 = m1
        self.alpha = alpha
        self.h = h
        self.radius = _Radius(rho, rho_bar)
        self.w = np.ones(n + 1)
        self.w[0] = self.w[-1] = 0.5
        self._pc = None

    def unpack(self, z):
        r_in, dr, d2r = self.radius(z[: self.m])
        r = np.concatenate([[self.r_ends[0]], r_in, [self.r_ends[1]]])
        th = np.concatenate([[self.th_ends[0]], z[self.m :], [self.th_ends[1]]])
        return r, th, dr, d2r

    def pack(self, r, th):
        return np.concatenate([self.radius.inverse(r[1:-1]), th[1:-1]])

    def _parts(self, r, th):
        dt = self.dt
        dth = np.diff(th)
        s = np.sin(dth)
        # 1 - cos, and the squared chord, without cancellation for short segments
        vers = 2 * np.sin(0.5 * dth) ** 2
        dr = np.diff(r)
        kin = np.sum(dr * dr + 2 * r[:-1] * r[1:] * vers) / (2 * dt)
        pot = dt * np.sum(self.w * (self.m1 / (self.alpha * r**self.alpha) + self.h))
        gkr = np.zeros_like(r)
        gkr[:-1] += (-dr + r[1:] * vers) / dt
        gkr[1:] += (dr + r[:-1] * vers) / dt
        gkt = np.zeros_like(r)
        j = r[:-1] * r[1:] * s / dt
        gkt[1:] += j
        gkt[:-1] -= j
        gpr = -dt * self.w * self.m1 / r ** (self.alpha + 1)
        return kin, pot, gkr, gkt, gpr

    def fun_grad(self, z):
        r, th, dr, _ = self.unpack(z)
        if np.any(r <= 0):
            return np.inf, None
        kin, pot, gkr, gkt, gpr = self._parts(r, th)
        if self.kind == "action":
            f = kin + pot
            gr, gt = gkr + gpr, gkt
        else:
            f = kin * pot
            gr, gt = pot * gkr + kin * gpr, pot * gkt
        return f, np.concatenate([gr[1:-1] * dr, gt[1:-1]])

    def admissible(self, z_old, z_new):
        r, th, _, _ = self.unpack(z_new)
        return bool(np.all(r > 0) and np.all(np.abs(np.diff(th)) < np.pi))

    def update_preconditioner(self, z):
        """Tridiagonal approximations of the radial and angular Hessian blocks."""
        r, th, dr, d2r = self.unpack(z)
        kin, pot, gkr, _, gpr = self._parts(r, th)
        ck, cv = (1.0, 1.0) if self.kind == "action" else (pot, kin)
        dt, m = self.dt, self.m
        curv = dt * self.w[1:-1] * (self.alpha + 1) * self.m1 / r[1:-1] ** (self.alpha + 2)
        ar = np.zeros((3, m))
        ar[1] = dr**2 * (ck * 2 / dt + cv * curv)
        ar[0, 1:] = -ck * dr[1:] * dr[:-1] / dt
        ar[2, :-1] = -ck * dr[1:] * dr[:-1] / dt
        grad_r = (ck * gkr + cv * gpr)[1:-1]
        ar[1] += np.abs(d2r * grad_r) + 1e-12 * ar[1].max()
        k = ck * r[:-1] * r[1:] / dt
        at = np.zeros((3, m))
        at[1] = k[:-1] + k[1:]
        at[0, 1:] = -k[1:-1]
        at[2, :-1] = -k[1:-1]
        self._pc = (ar, at)

    def precondition(self, g):
        ar, at = self._pc
        return np.concatenate(
            [solve_banded((1, 1), ar, g[: self.m]), solve_banded((1, 1), at, g[self.m :])]
        )

    def hessian(self, z):
        """Exact Hessian as a sparse banded part plus, for the product
        functional, the rank-two term ``grad K grad P^T + grad P grad K^T``.

        Returns ``(B, U)`` with ``U`` of shape ``(N, 2)`` or ``None``.
        """
        r, th, dr, d2r = self.unpack(z)
        kin, pot, gkr, gkt, gpr = self._parts(r, th)
        ck, cv = (1.0, 1.0) if self.kind == "action" else (pot, kin)
        dt, m, n = self.dt, self.m, self.n
        c, sn = np.cos(np.diff(th)), np.sin(np.diff(th))
        ri, rj = r[:-1], r[1:]

        # variable index of node k's radius / angle; -1 for the fixed endpoints
        iu = np.full(n + 1, -1)
        iu[1:-1] = np.arange(m)
        it = np.full(n + 1, -1)
        it[1:-1] = m + np.arange(m)
        k0, k1 = np.arange(n), np.arange(1, n + 1)
        rows, cols, vals = [], [], []

        def add(a, b, v):
            ok = (a >= 0) & (b >= 0)
            rows.append(a[ok])
            cols.append(b[ok])
            vals.append(v[ok])
            off = ok & (a != b)
            rows.append(b[off])
            cols.append(a[off])
            vals.append(v[off])

        one = np.ones(n)
        blocks = [
            (iu[k0], iu[k0], one),
            (iu[k1], iu[k1], one),
            (iu[k0], iu[k1], -c),
            (iu[k0], it[k1], rj * sn),
            (iu[k0], it[k0], -rj * sn),
            (iu[k1], it[k1], ri * sn),
            (iu[k1], it[k0], -ri * sn),
            (it[k0], it[k0], ri * rj * c),
            (it[k1], it[k1], ri * rj * c),
            (it[k0], it[k1], -ri * rj * c),
        ]
        for a, b, v in blocks:
            add(a, b, ck * v / dt)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        H = sparse.coo_matrix((vals, (rows, cols)), shape=(2 * m, 2 * m)).tocsr()

        # potential curvature and the change of radial variable
        curv = np.zeros(2 * m)
        curv[:m] = cv * dt * self.w[1:-1] * (self.alpha + 1) * self.m1 / r[1:-1] ** (self.alpha + 2)
        J = np.concatenate([dr, np.ones(m)])
        grad_r = (ck * gkr + cv * gpr)[1:-1]
        extra = np.concatenate([d2r * grad_r, np.zeros(m)])
        Jd = sparse.diags(J)
        B = (Jd @ (H + sparse.diags(curv)) @ Jd + sparse.diags(extra)).tocsc()
        if self.kind == "action":
            return B, None
        gk = np.concatenate([gkr[1:-1] * dr, gkt[1:-1]])
        gp = np.concatenate([gpr[1:-1] * dr, np.zeros(m)])
        return B, np.column_stack([gk, gp])

    def newton_polish(self, z, max_steps: int = 8):
        """Newton iterations accepted on decrease of the gradient norm.

        Used after the descent, when the remaining objective decrease is
        below the round-off of its evaluation but the gradient is not.
        """
        f, g = self.fun_grad(z)
        gn = float(np.linalg.norm(g))
        for _ in range(max_steps):
            B, U = self.hessian(z)
            try:
                lu = splu(B)
            except RuntimeError:
                break
            p = -lu.solve(g)
            if U is not None:
                # Woodbury with C = [[0, 1], [1, 0]] (so C^-1 = C)
                BU = np.column_stack([lu.solve(U[:, 0]), lu.solve(U[:, 1])])
                cap = np.array([[0.0, 1.0], [1.0, 0.0]]) + U.T @ BU
                p = p - BU @ np.linalg.solve(cap, U.T @ p)
            if float(g @ p) >= 0:
                break
            step, ok = 1.0, False
            while step > 1e-4:
                z_new = z + step * p
                if self.admissible(z, z_new):
                    f_new, g_new = self.fun_grad(z_new)
                    if (
                        np.isfinite(f_new)
                        and f_new <= f + 1e-13 * abs(f)
                        and np.linalg.norm(g_new) < gn
                    ):
                        ok = True
                        break
                step *= 0.5
            if not ok:
                break
            z, f, g, gn = z_new, f_new, g_new, float(np.linalg.norm(g_new))
        return z, f, g

    def minimize(self, z0, gtol, max_iter, polish: bool = True):
        self.update_preconditioner(z0)
        res = lbfgs_descent(
            self.fun_grad,
            z0,
            converged=lambda x, f, g: float(np.max(np.abs(g))) < gtol * abs(f),
            admissible=self.admissible,
            precond=self.precondition,
            max_iter=max_iter,
            callback=lambda i, x, f, g: self.update_preconditioner(x),
        )
        if polish and res.status != "converged":
            x, f, g = self.newton_polish(res.x)
            res.x, res.f, res.grad = x, f, g
            if float(np.max(np.abs(g))) < gtol * abs(f):
                res.status = "converged"
        return res

    def to_arc(self, z) -> OpenArc:
        r, th, _, _ = self.unpack(z)
        t = np.linspace(-self.T, self.T, self.n + 1)
        pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
        return OpenArc(t, pts, np.gradient(pts, t, axis=0, edge_order=2))

    def initial(self, depth: float, floor: float = 0.0):
        """Arc dipping to ``depth`` times the endpoint radius at ``t = 0``."""
        t = np.linspace(-self.T, self.T, self.n + 1)
        r_end = np.interp(t, [-self.T, self.T], self.r_ends)
        r = r_end * (depth + (1 - depth) * np.abs(t / self.T))
        r = np.maximum(r, floor)
        th = np.linspace(self.th_ends[0], self.th_ends[1], self.n + 1)
        return self.pack(r, th)


def angular_momentum(arc: OpenArc, center=(0.0, 0.0)) -> np.ndarray:
    """Per-segment discrete angular momentum ``cross(x_k, x_{k+1}) / dt_k``.

    At critical points of the trapezoid-rule action (or Maupertuis product)
    for a single center this quantity is exactly constant.
    """
    p = arc.points - np.asarray(center, float)
    cr = p[:-1, 0] * p[1:, 1] - p[:-1, 1] * p[1:, 0]
    return cr / np.diff(arc.times)


@dataclass
class FixedEndRun:
    label: str
    action: float
    status: str
    iterations: int


@dataclass
class FixedEndResult:
    """Best fixed-end arc and its comparison with the parabolic motion."""

    arc: OpenArc
    action: float
    ejection_action: float
    status: str
    runs: list = field(default_factory=list)

    @property
    def margin(self) -> float:
        return self.ejection_action - self.action

    @property
    def relative_margin(self) -> float:
        return self.margin / self.ejection_action

    @property
    def min_radius(self) -> float:
        return float(np.min(np.hypot(self.arc.points[:, 0], self.arc.points[:, 1])))


def fixed_end_minimize(
    pe: ParabolicEjection,
    T: float,
    n: int = 512,
    depths: Sequence[float] = (0.2, 0.5, 0.8),
    n_random: int = 0,
    seed: int = 0,
    gtol: float = 1e-9,
    max_iter: int = 20000,
) -> FixedEndResult:
    """Minimize the fixed-time action over arcs joining the endpoints of the
    parabolic motion on ``[-T, T]`` while sweeping the same angle.

    Starting arcs dip toward the center to each of ``depths`` (fractions of
    the endpoint radius); ``n_random`` further starts perturb the middle one
    with a generator seeded by ``seed``.  Every run is reported in ``runs``
    and the least action wins.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    R = float(pe.radius(T))
    prob = _PolarArc("action", (R, R), (pe.phi_minus, pe.phi_plus), T, n, pe.m1, pe.alpha)
    starts = [(f"depth={d:g}", prob.initial(d)) for d in depths]
    rng = np.random.default_rng(seed)
    base = prob.initial(0.5)
    for k in range(n_random):
        z = base.copy()
        bump = np.sin(np.pi * np.arange(1, n) / n)
        z[: n - 1] *= np.exp(0.3 * rng.standard_normal() * bump)
        z[n - 1 :] += 0.2 * rng.standard_normal() * bump
        starts.append((f"random[{k}]", z))

    best = None
    runs = []
    for label, z0 in starts:
        if not prob.admissible(z0, z0):
            continue
        res = prob.minimize(z0, gtol, max_iter)
        runs.append(FixedEndRun(label, float(res.f), res.status, res.nit))
        if best is None or res.f < best.f:
            best = res
    return FixedEndResult(prob.to_arc(best.x), float(best.f), ejection_action(pe, T), best.status, runs)


@dataclass(frozen=True)
class ObstacleSpec:
    """Disk obstacle ``|x| >= rho`` (and optionally ``|x| <= rho_bar``) on ``[-T, T]``."""

    rho: float
    T: float
    rho_bar: Optional[float] = None

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.rho_bar is not None and not self.rho_bar > self.rho:
            raise ValueError("rho_bar must exceed rho")


@dataclass
class ObstacleResult:
    """Minimizer of the zero-energy Maupertuis product outside a disk."""

    arc: OpenArc
    record: MaupertuisRecord
    status: str
    rho: float
    contact: np.ndarray = field(repr=False)
    angular_momentum: np.ndarray = field(repr=False)
    predicted_contact_momentum: float = np.nan

    @property
    def contact_intervals(self) -> list:
        """Maximal runs of contact nodes as ``(t_start, t_end)`` pairs."""
        idx = np.flatnonzero(self.contact)
        if idx.size == 0:
            return []
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate([[idx[0]], idx[breaks + 1]])
        ends = np.concatenate([idx[breaks], [idx[-1]]])
        t = self.arc.times
        return [(float(t[a]), float(t[b])) for a, b in zip(starts, ends)]

    def off_contact_momentum(self) -> np.ndarray:
        """Angular momentum on segments with at least one endpoint off the obstacle."""
        c = self.contact
        return self.angular_momentum[~(c[:-1] & c[1:])]

    def contact_momentum(self) -> np.ndarray:
        c = self.contact
        return self.angular_momentum[c[:-1] & c[1:]]


def obstacle_minimize(
    spec: ObstacleSpec,
    pe: ParabolicEjection,
    n: int = 512,
    gtol: float = 1e-11,
    max_iter: int = 40000,
) -> ObstacleResult:
    """Minimize the zero-energy Maupertuis product over arcs outside ``|x| < rho``.

    Endpoints and swept angle are those of the parabolic motion on
    ``[-T, T]``.  Radii are written ``r = rho + s**2`` so the obstacle never
    needs an explicit projection; a node in contact has ``s = 0``.

    Raises
    ------
    ValueError
        If the obstacle contains the endpoints, or the angle is zero.
    """
    R = float(pe.radius(spec.T))
    if spec.rho > R * (1 + 1e-12):
        raise ValueError("obstacle radius exceeds the endpoint radius")
    if spec.rho_bar is not None and spec.rho_bar < R:
        raise ValueError("upper radius is below the endpoint radius")
    if not 0 < abs(pe.delta_phi) <= 2 * np.pi + 1e-12:
        raise ValueError("swept angle must satisfy 0 < |delta phi| <= 2 pi")
    rho = min(spec.rho, R)
    prob = _PolarArc(
        "maupertuis",
        (R, R),
        (pe.phi_minus, pe.phi_plus),
        spec.T,
        n,
        pe.m1,
        pe.alpha,
        rho=rho,
        rho_bar=spec.rho_bar,
    )
    top = spec.rho_bar if spec.rho_bar is not None else np.inf
    gap = (R - rho) if R > rho else 0.1 * max(R, 1e-300)
    z0 = prob.initial(0.5, floor=rho + 0.25 * gap)
    r0, th0, _, _ = prob.unpack(z0)
    r0 = np.clip(r0, rho + 0.05 * gap, min(top, np.inf) - 1e-12 * R if np.isfinite(top) else np.inf)
    r0[0] = r0[-1] = R
    res = prob.minimize(prob.pack(r0, th0), gtol, max_iter)
    arc = prob.to_arc(res.x)
    rec = maupertuis(arc, 0.0, pe.m1, pe.alpha)
    r = np.hypot(arc.points[:, 0], arc.points[:, 1])
    contact = r <= rho * (1 + CONTACT_RTOL) if rho > 0 else np.zeros(r.size, bool)
    J = angular_momentum(arc)
    J_pred = float(np.sqrt(2 * pe.m1 / (rec.omega**2 * pe.alpha)) * rho ** ((2 - pe.alpha) / 2))
    return ObstacleResult(arc, rec, res.status, rho, contact, J, J_pred)


# ---------------------------------------------------------------------------
# grazing-arc angular sweep


def _check_sweep_args(rho, r_star, alpha):
    if not (1.0 <= alpha < 2.0):
        raise ValueError(f"alpha must lie in [1, 2), got {alpha}")
    if not (0 < rho and 0 < r_star):
        raise ValueError("radii must be positive")
    if rho > r_star:
        raise ValueError("rho must not exceed r_star")


def angular_sweep(rho: float, r_star: float, alpha: float) -> float:
    """Angle swept by a zero-energy arc from its closest approach ``rho`` out to ``r_star``.

    With ``xi = (rho/r)**((2-alpha)/2)`` the angle integral becomes
    ``2/(2-alpha) * int d xi / sqrt(1 - xi**2)`` between ``(rho/r_star)**((2-alpha)/2)``
    and 1, i.e. ``2/(2-alpha) * (pi/2 - arcsin((rho/r_star)**((2-alpha)/2)))``.
    """
    _check_sweep_args(rho, r_star, alpha)
    q = (rho / r_star) ** ((2.0 - alpha) / 2.0)
    return float(2.0 / (2.0 - alpha) * (np.pi / 2 - np.arcsin(min(q, 1.0))))


def angular_sweep_arcsin_ratio(rho: float, r_star: float, alpha: float) -> float:
    """``2/(2-alpha) * (pi/2 - arcsin(rho/r_star))``.

    This variant evaluates the arcsine at the plain radius ratio.  It agrees
    with :func:`angular_sweep` only in the limits ``rho -> 0`` and
    ``rho = r_star``; it is kept so the two can be tabulated side by side.
    """
    _check_sweep_args(rho, r_star, alpha)
    return float(2.0 / (2.0 - alpha) * (np.pi / 2 - np.arcsin(rho / r_star)))


def grazing_arc_sweep_numeric(
    rho: float, r_star: float, alpha: float, m1: float = 1.0, omega: float = 1.0
) -> float:
    """Quadrature of ``d theta / dr = (J/r**2) / sqrt(2 m1/(omega**2 alpha r**alpha) - J**2/r**2)``.

    ``J = sqrt(2 m1 / (omega**2 alpha)) rho**((2-alpha)/2)`` is the angular
    momentum of the zero-energy arc that is tangent to the circle of radius
    ``rho``.  The substitution ``r = rho (1 + u**2)`` removes the inverse
    square-root singularity at ``r = rho``.

    Raises
    ------
    RuntimeError
        If the quadrature error estimate exceeds ``1e-10``.
    """
    _check_sweep_args(rho, r_star, alpha)
    if rho == r_star:
        return 0.0
    C = 2.0 * m1 / (omega**2 * alpha)
    J = np.sqrt(C) * rho ** ((2.0 - alpha) / 2.0)
    excess0 = C * rho ** (2.0 - alpha) - J * J  # zero up to round-off

    def integrand(u):
        if u == 0.0:
            # limit of the integrand: 2 / sqrt(2 - alpha)
            return 2.0 / np.sqrt(2.0 - alpha)
        r = rho * (1.0 + u * u)
        # C r**(2-alpha) - J**2, written to avoid cancellation near u = 0
        excess = C * rho ** (2.0 - alpha) * np.expm1((2.0 - alpha) * np.log1p(u * u)) + excess0
        inner = excess / (r * r)
        return (J / (r * r)) / np.sqrt(inner) * 2.0 * rho * u

    u_max = np.sqrt(r_star / rho - 1.0)
    val, err = integrate.quad(integrand, 0.0, u_max, epsabs=1e-13, epsrel=1e-13, limit=400)
    if err > 1e-10:
        raise RuntimeError(f"quadrature error estimate {err:.3g} too large")
    return float(val)


def total_grazing_sweep(alpha: float, ratio: float, m1: float = 1.0) -> float:
    """Angle swept by both halves of a grazing arc, closest approach ``ratio * r_star``."""
    return 2.0 * grazing_arc_sweep_numeric(ratio, 1.0, alpha, m1)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    rho_over_rstar: float
    sweep_closed: float
    sweep_numeric: float
    sweep_arcsin_ratio: float

    @property
    def abs_err(self) -> float:
        return abs(self.sweep_closed - self.sweep_numeric)

    @property
    def arcsin_ratio_abs_err(self) -> float:
        return abs(self.sweep_arcsin_ratio - self.sweep_numeric)


def sweep_table(alphas: Sequence[float], ratios: Sequence[float], m1: float = 1.0) -> list:
    """Closed-form and numeric sweeps on a grid of ``(alpha, rho / r_star)``."""
    rows = []
    for a in alphas:
        for q in ratios:
            rows.append(
                SweepRow(
                    float(a),
                    float(q),
                    angular_sweep(q, 1.0, a),
                    grazing_arc_sweep_numeric(q, 1.0, a, m1),
                    angular_sweep_arcsin_ratio(q, 1.0, a),
                )
            )
    return rows


SWEEP_COLUMNS = (
    "alpha",
    "rho_over_rstar",
    "sweep_closed",
    "sweep_numeric",
    "abs_err",
    "sweep_arcsin_ratio",
    "arcsin_ratio_abs_err",
)


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow(
                [
                    repr(r.alpha),
                    repr(r.rho_over_rstar),
                    repr(r.sweep_closed),
                    repr(r.sweep_numeric),
                    repr(r.abs_err),
                    repr(r.sweep_arcsin_ratio),
                    repr(r.arcsin_ratio_abs_err),
                ]
            )
