import numpy as np
import pytest

from ncenter.fixtures import axis_bounce, bounce_system, two_center_system
from ncenter.model import CenterSystem, integrate_trajectory, potential


def test_two_center_layout():
    sys = two_center_system(1.25)
    np.testing.assert_array_equal(sys.positions, [[-0.5, 0.0], [0.5, 0.0]])
    np.testing.assert_array_equal(sys.masses, [1.0, 1.0])
    assert sys.alpha == 1.25


def test_bounce_layout_symmetric():
    sys = bounce_system()
    for flip in (np.array([-1.0, 1.0]), np.array([1.0, -1.0])):
        mirrored = sys.positions * flip
        order = [int(np.argmin(np.linalg.norm(sys.positions - p, axis=1))) for p in mirrored]
        np.testing.assert_allclose(sys.positions[order], mirrored)
        np.testing.assert_array_equal(sys.masses[order], sys.masses)


def test_bounce_needs_newtonian():
    sys = bounce_system()
    with pytest.raises(ValueError):
        axis_bounce(CenterSystem(sys.masses, sys.positions, 1.5))


def test_bounce_loop_geometry(bounce):
    x = bounce.loop.nodes
    np.testing.assert_allclose(x[0], bounce.system.positions[0], atol=1e-15)
    np.testing.assert_allclose(x[:, 1], 0.0, atol=1e-14)
    half = bounce.loop.n // 2
    np.testing.assert_allclose(x[half], bounce.system.positions[1], atol=1e-9)
    assert bounce.loop.period == pytest.approx(2 * bounce.T_bar, rel=1e-15)


def test_bounce_arc_energy(bounce):
    arc = bounce.arc
    v2 = np.sum(arc.velocities**2, axis=1)
    h = 0.5 * v2 - potential(arc.points, bounce.system)
    np.testing.assert_allclose(h, bounce.h, atol=1e-9 * np.max(0.5 * v2))


def test_bounce_arc_agrees_with_flow(bounce):
    # start the physical flow from the last sample and run it back toward the collision
    arc = bounce.arc
    t = arc.times
    k = np.where(t > 0)[0]
    back = integrate_trajectory(arc.points[k[-1]], arc.velocities[k[-1]], (t[k[-1]], t[k[10]]), bounce.system, t_eval=t[k[10:]][::-1])
    np.testing.assert_allclose(back.times, t[k[10:]])
    np.testing.assert_allclose(back.points, arc.points[k[10:]], atol=1e-10)


def test_bounce_loop_matches_flow(bounce):
    # between the collisions the loop follows the physical flow
    x = bounce.loop.nodes
    dt = bounce.loop.dt
    q = bounce.loop.n // 8
    v0 = (x[q + 1] - x[q - 1]) / (2 * dt)
    arc = integrate_trajectory(x[q], v0, (0.0, 2 * q * dt), bounce.system, t_eval=np.arange(2 * q + 1) * dt)
    err = np.max(np.linalg.norm(arc.points - x[q : 3 * q + 1], axis=1))
    assert err < 1e-3
