"""Levi-Civita regularization of binary collisions and collision asymptotics.

Near a center ``c_k`` of a Newtonian (``alpha = 1``) system write
``y - c_k = z**2`` in complex notation and change time by
``ds = dt / |y - c_k|``.  With ``V_k`` the potential of the remaining
centers and ``h`` the energy, the motion becomes

    2 z'' = h z + z V_k(y) + |z|**2 conj(z) grad V_k(y),
    2 |z'|**2 = m_k + |z|**2 (h + V_k(y)),

which is regular at ``z = 0``; physical time follows from ``t' = |z|**2``.

The second half of the module measures power-law rates at a collision
(moment of inertia, potential, kinetic energy, angular momentum) for any
``alpha`` in ``[1, 2)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .model import CenterSystem, OpenArc, grad_potential, potential

__all__ = [
    "LCState",
    "LCTrajectory",
    "ReflectionVerdict",
    "LagrangeJacobiReport",
    "AsymptoticFit",
    "lc_forward",
    "lc_inverse",
    "lc_rhs",
    "lc_energy_residual",
    "integrate_lc",
    "collision_state",
    "nearest_center",
    "estimate_collision_time",
    "reflection_test",
    "lagrange_jacobi_check",
    "collision_arc",
    "asymptotic_fit",
    "angular_momentum_envelope",
    "write_fits_csv",
]


def _c(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p[..., 0] + 1j * p[..., 1]


def _xy(z) -> np.ndarray:
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1)


def _require_newtonian(sys: CenterSystem):
    if sys.alpha != 1.0:
        raise ValueError("Levi-Civita regularization requires alpha = 1")


def _others(sys: CenterSystem, k: int) -> Optional[CenterSystem]:
    if sys.n_centers == 1:
        return None
    keep = np.arange(sys.n_centers) != k
    return CenterSystem(sys.masses[keep], sys.positions[keep], sys.alpha)


@dataclass(frozen=True)
class LCState:
    """Levi-Civita coordinate ``z`` (with ``z**2 = y - c_k``) and ``dz/ds``."""

    z: np.ndarray
    zprime: np.ndarray
    s: float
    h: float
    k: int
    t: float = 0.0

    def position(self, sys: CenterSystem) -> np.ndarray:
        return _xy(_c(self.z) ** 2) + sys.positions[self.k]


@dataclass(frozen=True)
class LCTrajectory:
    """Samples of a regularized trajectory, indexable as :class:`LCState` objects."""

    s: np.ndarray
    z: np.ndarray  # complex
    zprime: np.ndarray  # complex
    t: np.ndarray
    h: float
    k: int

    def __len__(self) -> int:
        return self.s.size

    def __getitem__(self, i) -> LCState:
        return LCState(_xy(self.z[i]), _xy(self.zprime[i]), float(self.s[i]), self.h, self.k, float(self.t[i]))


def nearest_center(arc: OpenArc, sys: CenterSystem) -> tuple[int, int]:
    """Index of the center closest to the arc and of the sample realizing it."""
    d = np.linalg.norm(arc.points[:, None, :] - sys.positions[None], axis=-1)
    i, k = np.unravel_index(np.argmin(d), d.shape)
    return int(k), int(i)


def _ds_weight(ra, rb, dt):
    """``ds / dt`` averaged over a step, exact when ``r`` is linear in ``t``.

    A step ending on the center gets the parabolic rate ``3 / r_other``
    (``r ~ |t|**(2/3)`` integrates ``dt / r`` to ``3 dt / r(dt)``).
    """
    ra = np.asarray(ra, float)
    rb = np.asarray(rb, float)
    out = np.empty(np.broadcast(ra, rb).shape)
    zero_a = ra == 0
    zero_b = rb == 0
    both = zero_a & zero_b
    if np.any(both):
        raise ValueError("two consecutive samples on the center")
    close = ~zero_a & ~zero_b & (np.abs(rb - ra) <= 1e-12 * np.maximum(ra, rb))
    gen = ~zero_a & ~zero_b & ~close
    out[zero_a] = 3.0 / rb[zero_a]
    out[zero_b] = 3.0 / ra[zero_b]
    out[close] = 2.0 / (ra[close] + rb[close])
    out[gen] = np.log(rb[gen] / ra[gen]) / (rb[gen] - ra[gen])
    return out


def _lift(w: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Continuous square root of the complex samples ``w`` along ``s``.

    The first root is principal; later roots take the sign closest to a
    linear extrapolation of the previous two, which also carries the branch
    through ``z = 0`` with a continuous derivative.
    """
    roots = np.sqrt(w.astype(complex))
    z = np.empty_like(roots)
    z[0] = roots[0]
    for i in range(1, w.size):
        if i == 1:
            pred = z[0]
        else:
            ds_prev = s[i - 1] - s[i - 2]
            slope = (z[i - 1] - z[i - 2]) / ds_prev if ds_prev > 0 else 0.0
            pred = z[i - 1] + slope * (s[i] - s[i - 1])
        r = roots[i]
        z[i] = r if abs(r - pred) <= abs(r + pred) else -r
    return z


def lc_forward(arc: OpenArc, sys: CenterSystem, k: Optional[int] = None, h: Optional[float] = None) -> LCTrajectory:
    """Levi-Civita transform of an arc about center ``k`` (default: the nearest).

    ``s`` starts at 0 and accumulates ``dt / |y - c_k|`` step by step.  ``z'``
    is ``dy/dt * conj(z) / 2`` where velocities are available and finite,
    otherwise a finite difference of ``z`` in ``s``.  ``h`` defaults to the
    median sample energy.

    Raises
    ------
    ValueError
        If ``alpha != 1``.
    """
    _require_newtonian(sys)
    if k is None:
        k, _ = nearest_center(arc, sys)
    w = _c(arc.points - sys.positions[k])
    r = np.abs(w)
    dt = np.diff(arc.times)
    s = np.concatenate([[0.0], np.cumsum(dt * _ds_weight(r[:-1], r[1:], dt))])
    z = _lift(w, s)
    zp = np.gradient(z, s, edge_order=2) if z.size > 2 else np.full(z.size, np.nan + 0j)
    if arc.velocities is not None:
        v = _c(arc.velocities)
        ok = np.isfinite(v) & (r > 0)
        zp = np.where(ok, v * np.conj(z) / 2, zp)
    if h is None:
        if arc.velocities is not None:
            vv = arc.velocities
            good = np.all(np.isfinite(vv), axis=1) & (r > 0)
            e = 0.5 * np.sum(vv[good] ** 2, axis=1) - potential(arc.points[good], sys)
            h = float(np.median(e))
        else:
            h = float("nan")
    return LCTrajectory(s, z, zp, np.asarray(arc.times, float).copy(), float(h), int(k))


def lc_inverse(traj: LCTrajectory, sys: CenterSystem, t0: Optional[float] = None) -> OpenArc:
    """Physical arc from a regularized one: ``y = z**2 + c_k``.

    Times are the trajectory's own, shifted to start at ``t0``.  When they
    are missing they are rebuilt from ``dt = ds / w`` with the step weights
    of :func:`lc_forward`.  Velocities are ``2 z' / conj(z)`` (``nan`` at
    the collision).  A trajectory integrated backward in ``s`` is returned
    in increasing time.
    """
    c = sys.positions[traj.k]
    y = _xy(traj.z**2) + c
    r = np.abs(traj.z) ** 2
    if np.all(np.isfinite(traj.t)):
        t = traj.t - traj.t[0] + (traj.t[0] if t0 is None else t0)
    else:
        t0 = 0.0 if t0 is None else t0
        ds = np.diff(traj.s)
        # invert ds = dt * weight(ra, rb); the weight does not depend on dt
        dt = ds / _ds_weight(r[:-1], r[1:], ds)
        t = np.concatenate([[t0], t0 + np.cumsum(dt)])
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(r > 0, 2 * traj.zprime / np.conj(traj.z), np.nan + 0j)
    v = _xy(v)
    if t.size > 1 and t[-1] < t[0]:
        t, y, v = t[::-1], y[::-1], v[::-1]
    return OpenArc(t, y, v)


def lc_rhs(state: LCState, sys: CenterSystem) -> np.ndarray:
    """``z''`` of the regularized equation at ``state``."""
    _require_newtonian(sys)
    z = _c(state.z)
    return _xy(_lc_rhs_complex(z, state.h, state.k, sys))


def _lc_rhs_complex(z, h, k, sys):
    other = _others(sys, k)
    if other is None:
        return 0.5 * h * z
    y = _xy(z**2) + sys.positions[k]
    if np.min(np.linalg.norm(y - other.positions, axis=-1)) == 0:
        raise ValueError("regularized trajectory reached another center")
    vk = potential(y, other)
    gk = _c(grad_potential(y, other))
    return 0.5 * (h * z + z * vk + abs(z) ** 2 * np.conj(z) * gk)


def lc_energy_residual(state: LCState, sys: CenterSystem) -> float:
    """``2 |z'|**2 - m_k - |z|**2 (h + V_k)``, zero on the energy-``h`` surface."""
    z = _c(state.z)
    zp = _c(state.zprime)
    other = _others(sys, state.k)
    vk = 0.0 if other is None else float(potential(_xy(z**2) + sys.positions[state.k], other))
    return float(2 * abs(zp) ** 2 - sys.masses[state.k] - abs(z) ** 2 * (state.h + vk))


def collision_state(sys: CenterSystem, k: int, angle: float, h: float, t: float = 0.0) -> LCState:
    """State at the collision with center ``k``; the ejection leaves along ``angle``.

    At ``z = 0`` the energy relation fixes ``|z'| = sqrt(m_k / 2)``, and
    ``y - c_k = z**2`` leaves along ``arg(z'**2)``.
    """
    a = np.sqrt(sys.masses[k] / 2.0) * np.exp(0.5j * angle)
    return LCState(np.zeros(2), _xy(a), 0.0, float(h), int(k), float(t))


def integrate_lc(
    initial: LCState,
    sys: CenterSystem,
    s_span: tuple[float, float],
    s_eval: Optional[Sequence[float]] = None,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    stop_distance: Optional[float] = None,
) -> LCTrajectory:
    """Integrate the regularized equation over ``s_span`` (either direction).

    The state carries ``t`` with ``dt/ds = |z|**2``.  Integration stops with
    an error if the physical point comes within ``stop_distance`` (default
    ``1e-6`` times the minimum center spacing) of another center.

    Raises
    ------
    ValueError
        On reaching another center or an integrator failure.
    """
    _require_newtonian(sys)
    k, h = initial.k, initial.h
    other = _others(sys, k)
    if stop_distance is None:
        stop_distance = 1e-6 * (sys.min_spacing if np.isfinite(sys.min_spacing) else 1.0)

    def rhs(s, u):
        z = u[0] + 1j * u[1]
        zp = u[2] + 1j * u[3]
        zpp = _lc_rhs_complex(z, h, k, sys)
        return [zp.real, zp.imag, zpp.real, zpp.imag, abs(z) ** 2]

    events = []
    if other is not None:

        def near_other(s, u):
            y = _xy((u[0] + 1j * u[1]) ** 2) + sys.positions[k]
            return np.min(np.linalg.norm(y - other.positions, axis=-1)) - stop_distance

        near_other.terminal = True
        events.append(near_other)

    z0, zp0 = _c(initial.z), _c(initial.zprime)
    u0 = [z0.real, z0.imag, zp0.real, zp0.imag, initial.t]
    sol = solve_ivp(
        rhs, s_span, u0, method="DOP853", rtol=rtol, atol=atol, t_eval=s_eval, events=events or None
    )
    if sol.status == -1:
        raise ValueError(f"integration failed: {sol.message}")
    if sol.status == 1:
        raise ValueError("regularized trajectory reached another center")
    u = sol.y
    return LCTrajectory(sol.t, u[0] + 1j * u[1], u[2] + 1j * u[3], u[4], float(h), int(k))


# ---------------------------------------------------------------------------
# collision detection and the reflection criterion


def estimate_collision_time(arc: OpenArc, sys: CenterSystem) -> tuple[float, int]:
    """Collision time and center index from the sample nearest a center.

    Near a collision ``|y - c_k| ~ (mu |t - t0|)**(2/(2+alpha))``, so a
    sample at distance ``r`` lies ``r**((2+alpha)/2) / mu`` away from ``t0``;
    the side is read from the radial velocity (or from the neighbouring
    samples when velocities are absent).
    """
    k, i = nearest_center(arc, sys)
    rel = arc.points[i] - sys.positions[k]
    r = float(np.hypot(*rel))
    if r == 0.0:
        return float(arc.times[i]), k
    a = sys.alpha
    mu = (a + 2) * np.sqrt(sys.masses[k] / (2 * a))
    lag = r ** ((2 + a) / 2) / mu
    if arc.velocities is not None and np.all(np.isfinite(arc.velocities[i])):
        outward = float(rel @ arc.velocities[i]) > 0
    else:
        dist = np.linalg.norm(arc.points - sys.positions[k], axis=1)
        before = dist[i - 1] if i > 0 else np.inf
        after = dist[i + 1] if i + 1 < len(arc) else np.inf
        outward = before < after
    return float(arc.times[i] - lag if outward else arc.times[i] + lag), k


@dataclass(frozen=True)
class ReflectionVerdict:
    """Outcome of :func:`reflection_test`.

    ``gap`` is the angle in ``[0, pi]`` between the incoming and outgoing
    collision rays; it vanishes for a reflection.  ``residual`` is
    the antisymmetry ``|z'(0-) + z'(0+)| / |z'(0+)|`` of the one-sided
    limits, each taken on its own side's branch and oriented away from the
    collision.
    """

    kind: str  # "Reflection" | "Transversal"
    gap: float
    residual: float
    k: int
    t_collision: float
    symmetry_residual: float
    zprime_minus: complex
    zprime_plus: complex


def _one_sided_limit(rho, zp, n_fit):
    """Extrapolate ``z'`` to ``|z| = 0`` from the ``n_fit`` nearest samples.

    Returns the quadratic extrapolant and the gap to a linear fit on the
    nearest three, which measures how well the limit has settled.
    """
    order = np.argsort(rho)[:n_fit]
    x, v = rho[order], zp[order]
    deg = min(2, x.size - 1)
    hi = np.polyval(np.polyfit(x, v, deg), 0.0)
    lo_n = min(3, x.size)
    lo = np.polyval(np.polyfit(x[:lo_n], v[:lo_n], min(1, lo_n - 1)), 0.0)
    return complex(hi), abs(hi - lo)


def reflection_test(
    y: OpenArc, sys: CenterSystem, tol: float = 1e-4, n_fit: int = 5
) -> ReflectionVerdict:
    """Decide whether an arc through a collision is a reflection.

    Both sides of the collision are lifted separately; on each the outward
    derivative ``z'`` is extrapolated to the collision from ``n_fit`` samples.
    A reflection leaves along the incoming ray, so the two outward limits
    agree up to the sign ambiguity of the square root.

    Raises
    ------
    ValueError
        If ``alpha != 1``, a side has fewer than three samples, or the
        one-sided limits fail to settle.
    """
    _require_newtonian(sys)
    t0, k = estimate_collision_time(y, sys)
    c = sys.positions[k]
    w = _c(y.points - c)
    r = np.abs(w)
    scale = float(np.max(r))
    limits = {}
    for side, mask in (("minus", (y.times < t0) & (r > 1e-14 * scale)), ("plus", (y.times > t0) & (r > 1e-14 * scale))):
        idx = np.flatnonzero(mask)
        if idx.size < 3:
            raise ValueError(f"too few samples on the {side} side of the collision")
        sub = y.slice(idx)
        if side == "minus":
            # reverse time so that s increases away from the collision
            sub = OpenArc(-sub.times[::-1], sub.points[::-1], None if sub.velocities is None else -sub.velocities[::-1])
        sub = OpenArc(sub.times, sub.points, sub.velocities)
        tr = lc_forward(sub, sys, k=k, h=0.0)
        limit, spread = _one_sided_limit(np.abs(tr.z), tr.zprime, n_fit)
        if not np.isfinite(limit) or spread > 0.1 * abs(limit):
            raise ValueError("one-sided limits of z' fail to settle; is this a collision arc?")
        limits[side] = limit

    # samples are ordered from the collision outward on both sides, so each
    # limit is already the outward derivative; fix the square-root sign
    wp, wm = limits["plus"], limits["minus"]
    if abs(wm + wp) < abs(wm - wp):
        wm = -wm
    residual = abs(wm - wp) / abs(wp)
    theta_p = np.angle(wp**2)
    theta_m = np.angle(wm**2)
    gap = float(abs(np.angle(np.exp(1j * (theta_p - theta_m)))))
    kind = "Reflection" if residual < tol else "Transversal"
    sym = _time_symmetry(y, t0, c, sys.alpha)
    # report in the antisymmetric convention: incoming limit is minus the outgoing
    return ReflectionVerdict(kind, gap, float(residual), k, t0, sym, complex(-wm), complex(wp))


def _time_symmetry(y: OpenArc, t0: float, c, alpha: float) -> float:
    """``max |y(t0 + t) - y(t0 - t)|`` over the common reach, relative to the local amplitude."""
    beta = 2.0 / (2.0 + alpha)
    dtau = y.times - t0
    sides = []
    for mask in (dtau < 0, dtau > 0):
        tau = np.abs(dtau[mask]) ** beta
        order = np.argsort(tau)
        tau = np.concatenate([[0.0], tau[order]])
        pts = np.vstack([c, y.points[mask][order]])
        keep = np.concatenate([[True], np.diff(tau) > 0])
        sides.append((CubicSpline(tau[keep], pts[keep], axis=0), tau.max()))
    reach = min(sides[0][1], sides[1][1])
    tau = np.linspace(0.0, reach, 201)
    a = sides[0][0](tau)
    b = sides[1][0](tau)
    amp = max(np.max(np.linalg.norm(a - c, axis=1)), np.max(np.linalg.norm(b - c, axis=1)), 1e-300)
    return float(np.max(np.linalg.norm(a - b, axis=1)) / amp)


# ---------------------------------------------------------------------------
# collision asymptotics (any alpha)


def _split(sys: CenterSystem, k: int):
    m = sys.masses[k]
    return m, sys.positions[k], _others(sys, k)


@dataclass(frozen=True)
class LagrangeJacobiReport:
    """Check of ``I'' = (4 - 2 alpha)(h + V) + B1`` with
    ``B1 = 2 alpha (h + V*) + 2 <grad V*, y - c>`` (``V*``: the other centers)."""

    max_residual: float
    relative_residual: float
    max_abs_b1: float
    max_abs_iddot: float
    times: np.ndarray
    residual: np.ndarray


def lagrange_jacobi_check(y: OpenArc, sys: CenterSystem, k: Optional[int] = None, h: Optional[float] = None) -> LagrangeJacobiReport:
    """Compare a finite-difference ``I''`` of ``I = |y - c_k|**2`` with the identity.

    ``h`` defaults to the median sample energy (velocities required).

    Raises
    ------
    ValueError
        With fewer than five samples.
    """
    if len(y) < 5:
        raise ValueError("need at least five samples for the identity check")
    if k is None:
        k, _ = nearest_center(y, sys)
    m, c, other = _split(sys, k)
    if h is None:
        if y.velocities is None:
            raise ValueError("energy h needs velocities")
        e = 0.5 * np.sum(y.velocities**2, axis=1) - potential(y.points, sys)
        h = float(np.median(e))
    rel = y.points - c
    I = np.sum(rel**2, axis=1)
    t = y.times
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    idd = 2 * (h0 * I[2:] - (h0 + h1) * I[1:-1] + h1 * I[:-2]) / (h0 * h1 * (h0 + h1))
    pts = y.points[1:-1]
    V = potential(pts, sys)
    if other is None:
        b1 = 2 * sys.alpha * h * np.ones(pts.shape[0])
    else:
        b1 = 2 * sys.alpha * (h + potential(pts, other)) + 2 * np.sum(grad_potential(pts, other) * rel[1:-1], axis=1)
    pred = (4 - 2 * sys.alpha) * (h + V) + b1
    res = idd - pred
    return LagrangeJacobiReport(
        float(np.max(np.abs(res))),
        float(np.max(np.abs(res) / np.abs(pred))),
        float(np.max(np.abs(b1))),
        float(np.max(np.abs(idd))),
        t[1:-1].copy(),
        res,
    )


def collision_arc(
    sys: CenterSystem,
    k: int,
    angle: float,
    h: float = 0.0,
    t_min: float = 1e-8,
    t_max: float = 1e-1,
    n: int = 400,
    r_start: Optional[float] = None,
) -> OpenArc:
    """Ejection from center ``k`` along ``angle``, sampled at log-spaced times.

    The arc is the solution of the N-center equation leaving the collision at
    ``t = 0`` with energy ``h``, sampled at ``n`` times between ``t_min`` and
    ``t_max``.  For ``alpha = 1`` it is obtained exactly by integrating the
    regularized equation from ``z = 0``; otherwise the integration starts at
    radius ``r_start`` on the ejection ray with the parabolic speed fixed by
    the energy, and the start time given by the parabolic law.  Reverse the
    arc for the collision side.
    """
    t_eval = np.geomspace(t_min, t_max, n)
    m, c, other = _split(sys, k)
    a = sys.alpha
    if a == 1.0:
        st = collision_state(sys, k, angle, h)
        # t grows like |z'|**2 s**3 / 3 near the collision; overshoot generously
        s_hi = (3 * t_max / abs(_c(st.zprime)) ** 2) ** (1 / 3) * 4
        dense = _integrate_lc_dense(st, sys, s_hi)
        s_of_t = _invert_monotone(dense, t_eval, s_hi)
        u = dense(s_of_t)
        z = u[0] + 1j * u[1]
        zp = u[2] + 1j * u[3]
        pts = _xy(z**2) + c
        vel = _xy(2 * zp / np.conj(z))
        return OpenArc(t_eval, pts, vel)

    mu = (a + 2) * np.sqrt(m / (2 * a))
    if r_start is None:
        # the parabolic start is off in time by a relative O(r**alpha); close
        # starts instead amplify round-off in the energy
        r_start = (1e-3 * mu * t_min) ** (2 / (2 + a))
    e = np.array([np.cos(angle), np.sin(angle)])
    v_start = m / (a * r_start**a) + (0.0 if other is None else float(potential(c + r_start * e, other)))
    speed = np.sqrt(2 * (h + v_start))
    t0 = r_start ** ((2 + a) / 2) / mu

    # integrate the offset from the colliding center in log time, where the
    # parabolic regime is scale invariant and steps stay of order one
    def rhs(sig, u):
        t = np.exp(sig)
        q = u[:2]
        acc = -m * q / np.dot(q, q) ** ((a + 2) / 2)
        if other is not None:
            acc = acc + grad_potential(q + c, other)
        return t * np.concatenate([u[2:], acc])

    targets = t_eval[t_eval >= t0]
    sol = solve_ivp(
        rhs,
        (np.log(t0), np.log(t_max)),
        np.concatenate([r_start * e, speed * e]),
        method="DOP853",
        rtol=1e-13,
        atol=1e-30,
        t_eval=np.log(targets),
    )
    if not sol.success:
        raise ValueError(f"integration failed: {sol.message}")
    return OpenArc(targets, sol.y[:2].T + c, sol.y[2:].T)


def _integrate_lc_dense(st: LCState, sys: CenterSystem, s_hi: float):
    k, h = st.k, st.h

    def rhs(s, u):
        z = u[0] + 1j * u[1]
        zpp = _lc_rhs_complex(z, h, k, sys)
        return [u[2], u[3], zpp.real, zpp.imag, abs(z) ** 2]

    z0 = _c(st.zprime)
    sol = solve_ivp(rhs, (0.0, s_hi), [0.0, 0.0, z0.real, z0.imag, 0.0], method="DOP853", rtol=1e-13, atol=1e-16, dense_output=True)
    if not sol.success:
        raise ValueError(f"integration failed: {sol.message}")
    return sol.sol


def _invert_monotone(dense, t_targets, s_hi):
    """Solve ``t(s) = target`` for each target using bisection-polished Newton on the dense output."""
    from scipy.optimize import brentq

    t_end = dense(s_hi)[4]
    if t_end < t_targets[-1]:
        raise ValueError("regularized integration did not reach the requested time")
    return np.array([brentq(lambda s: dense(s)[4] - tt, 0.0, s_hi, xtol=1e-15, rtol=1e-15) for tt in t_targets])


@dataclass(frozen=True)
class AsymptoticFit:
    """Power-law fit ``|Q(t)| ~ A |t - t0|**p`` of one quantity near a collision."""

    quantity: str
    fitted_exponent: float
    expected_exponent: float
    fit_window: tuple
    r_squared: float
    amplitude: float = float("nan")
    expected_amplitude: float = float("nan")

    @property
    def relative_error(self) -> float:
        return abs(self.fitted_exponent - self.expected_exponent) / abs(self.expected_exponent)


def _loglog(x, y):
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    res = ly - (slope * lx + icpt)
    tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(res**2) / tot if tot > 0 else 1.0
    return float(slope), float(icpt), float(max(0.0, min(1.0, r2)))


def asymptotic_fit(
    y: OpenArc,
    sys: CenterSystem,
    t0: Optional[float] = None,
    window: tuple = (1e-6, 1e-2),
    k: Optional[int] = None,
) -> list:
    """Fit collision rates of ``I``, ``I'``, ``I''``, ``V`` and ``|y'|**2 / 2``.

    Angular momentum ``J`` about the center and ``theta' = J / I`` are
    fitted as well when they are resolved (they vanish on exactly radial
    arcs); their positive exponents confirm ``J -> 0`` and ``theta' -> 0``.

    Samples with ``window[0] <= |t - t0| <= window[1]`` are used.  ``I''`` is
    evaluated from the equation of motion, ``2 |y'|**2 + 2 <y - c, grad V>``,
    so no numerical differentiation is involved.  The ``I`` fit also reports
    its amplitude against ``mu**(4/(2+alpha))``.

    Raises
    ------
    ValueError
        If fewer than ten samples fall in the window or the window spans less
        than two decades.
    """
    if y.velocities is None:
        raise ValueError("asymptotic fits need velocities")
    if window[1] / window[0] < 100 * (1 - 1e-9):
        raise ValueError("fit window must span at least two decades")
    if t0 is None:
        t0, kk = estimate_collision_time(y, sys)
        k = kk if k is None else k
    if k is None:
        k, _ = nearest_center(y, sys)
    m, c, _ = _split(sys, k)
    a = sys.alpha
    tau = np.abs(y.times - t0)
    sel = (tau >= window[0]) & (tau <= window[1])
    if sel.sum() < 10:
        raise ValueError("too few samples inside the fit window")
    tau = tau[sel]
    rel = y.points[sel] - c
    vel = y.velocities[sel]
    ke = 0.5 * np.sum(vel**2, axis=1)
    V = potential(y.points[sel], sys)
    I = np.sum(rel**2, axis=1)
    Id = np.abs(2 * np.sum(rel * vel, axis=1))
    Idd = np.abs(2 * np.sum(vel**2, axis=1) + 2 * np.sum(rel * grad_potential(y.points[sel], sys), axis=1))
    mu = (a + 2) * np.sqrt(m / (2 * a))
    q = 2 + a
    expected = {
        "I": (I, 4 / q),
        "I_dot": (Id, (2 - a) / q),
        "I_ddot": (Idd, -2 * a / q),
        "V": (V, -2 * a / q),
        "kinetic": (ke, -2 * a / q),
    }
    # angular momentum about the center and the angular velocity vanish at
    # the collision; they are fitted only when resolved above round-off
    J = np.abs(rel[:, 0] * vel[:, 1] - rel[:, 1] * vel[:, 0])
    if np.all(J > 1e-12 * np.sqrt(I) * np.linalg.norm(vel, axis=1)):
        expected["J"] = (J, (4 + a) / q)
        expected["theta_dot"] = (J / I, a / q)
    win = (float(tau.min()), float(tau.max()))
    fits = []
    for name, (vals, p) in expected.items():
        slope, icpt, r2 = _loglog(tau, vals)
        amp = float(np.exp(icpt)) if name == "I" else float("nan")
        exp_amp = float(mu ** (4 / q)) if name == "I" else float("nan")
        fits.append(AsymptoticFit(name, slope, p, win, r2, amp, exp_amp))
    return fits


def angular_momentum_envelope(y: OpenArc, sys: CenterSystem, t0: float, k: Optional[int] = None) -> np.ndarray:
    """``|J(t)| / |t - t0|**((4+alpha)/(2+alpha))`` with ``J = cross(y - c_k, y')``.

    Bounded values as ``t -> t0`` confirm the decay rate of the angular
    momentum about the colliding center.
    """
    if k is None:
        k, _ = nearest_center(y, sys)
    rel = y.points - sys.positions[k]
    J = rel[:, 0] * y.velocities[:, 1] - rel[:, 1] * y.velocities[:, 0]
    tau = np.abs(y.times - t0)
    p = (4 + sys.alpha) / (2 + sys.alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(J) / tau**p


FIT_COLUMNS = ("quantity", "expected", "fitted", "r_squared", "window_lo", "window_hi")


def write_fits_csv(fits, path, extra: Optional[dict] = None) -> None:
    """One row per fit; ``extra`` maps additional column names to constant values."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(extra) + list(FIT_COLUMNS))
        for f in fits:
            w.writerow(
                [repr(v) if isinstance(v, float) else v for v in extra.values()]
                + [f.quantity, repr(f.expected_exponent), repr(f.fitted_exponent), repr(f.r_squared), repr(f.fit_window[0]), repr(f.fit_window[1])]
            )
