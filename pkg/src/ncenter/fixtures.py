"""Reference configurations shared by tests, demos and the command line."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .model import CenterSystem, OpenArc, PeriodicLoop
from .regularize import _lc_rhs_complex, collision_state

__all__ = ["two_center_system", "bounce_system", "AxisBounce", "axis_bounce"]


def two_center_system(alpha: float = 1.5) -> CenterSystem:
    """Unit masses at ``(-0.5, 0)`` and ``(0.5, 0)``."""
    return CenterSystem(np.array([1.0, 1.0]), np.array([[-0.5, 0.0], [0.5, 0.0]]), alpha)


def bounce_system(side_mass: float = 0.5) -> CenterSystem:
    """Newtonian centers at ``(+-0.5, 0)`` (unit mass) and ``(0, +-1)``.

    The layout is symmetric under both reflections ``x -> -x`` and
    ``y -> -y``, so the segment between the first two centers is invariant.
    """
    pos = np.array([[-0.5, 0.0], [0.5, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return CenterSystem(np.array([1.0, 1.0, side_mass, side_mass]), pos, 1.0)


@dataclass(frozen=True)
class AxisBounce:
    """Collision-reflection motion along the axis between centers 0 and 1.

    ``loop`` samples one period ``2 T_bar`` at ``n`` nodes with node 0 on
    center 0; ``arc`` is an unevenly sampled stretch around that collision
    with exact velocities.
    """

    system: CenterSystem
    h: float
    T_bar: float
    loop: PeriodicLoop
    arc: OpenArc


def _axis_half(sys: CenterSystem, h: float):
    """Dense regularized solution leaving center 0 along +x, up to the midpoint."""
    st = collision_state(sys, 0, 0.0, h)
    c = sys.positions[0]

    def rhs(s, u):
        z = u[0] + 1j * u[1]
        zpp = _lc_rhs_complex(z, h, 0, sys)
        return [u[2], u[3], zpp.real, zpp.imag, abs(z) ** 2]

    def midpoint(s, u):
        return ((u[0] + 1j * u[1]) ** 2).real + c[0]

    midpoint.terminal = True
    midpoint.direction = 1
    a = st.zprime
    sol = solve_ivp(
        rhs, (0.0, 100.0), [0.0, 0.0, a[0], a[1], 0.0], method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True, events=midpoint
    )
    if sol.status != 1:
        raise RuntimeError("axis motion does not reach the midpoint")
    s_mid = float(sol.t_events[0][0])
    return sol.sol, s_mid, float(sol.sol(s_mid)[4])


def axis_bounce(sys: CenterSystem = None, h: float = 0.0, n: int = 256, arc_half_width: float = 1e-3, arc_samples: int = 41) -> AxisBounce:
    """Axis bounce between the first two centers of a mirror-symmetric layout.

    The motion leaves center 0 along ``+x`` at energy ``h``; mirror symmetry
    carries it from the midpoint to center 1, after which it retraces itself.
    """
    sys = bounce_system() if sys is None else sys
    if sys.alpha != 1.0:
        raise ValueError("the bounce fixture is built by Levi-Civita integration and needs alpha = 1")
    dense, s_mid, t_mid = _axis_half(sys, h)
    c0 = sys.positions[0]
    T_bar = 2 * t_mid

    def state(t):
        """Position and velocity at ``0 <= t <= t_mid``."""
        if t == 0.0:
            return c0.copy(), np.array([np.nan, np.nan])
        s = brentq(lambda ss: dense(ss)[4] - t, 0.0, s_mid, xtol=1e-16, rtol=1e-15)
        u = dense(s)
        z = u[0] + 1j * u[1]
        zp = u[2] + 1j * u[3]
        y = z * z
        v = 2 * zp / np.conj(z)
        return np.array([y.real, y.imag]) + c0, np.array([v.real, v.imag])

    def position(t):
        t = t % (2 * T_bar)
        if t > T_bar:
            t = 2 * T_bar - t
        if t <= t_mid:
            return state(t)[0]
        p = state(T_bar - t)[0]
        return np.array([-p[0], p[1]])

    times = np.arange(n) * (2 * T_bar / n)
    nodes = np.array([position(t) for t in times])
    loop = PeriodicLoop(2 * T_bar, nodes)

    # uneven samples on both sides of the collision at t = 0
    left = -arc_half_width * np.linspace(1.0, 0.0, arc_samples, endpoint=False) ** 1.5
    right = arc_half_width * (np.linspace(0.0, 1.0, arc_samples + 1)[1:] ** 1.5 * 0.97 + 1e-9)
    ts = np.concatenate([left, right])
    pts, vel = [], []
    for t in ts:
        p, v = state(abs(t))
        pts.append(p)
        vel.append(v if t > 0 else -v)
    arc = OpenArc(ts, np.array(pts), np.array(vel))
    return AxisBounce(sys, h, T_bar, loop, arc)
