import numpy as np
import pytest

from ncenter.descent import lbfgs_descent


def _rosenbrock(x):
    f = 100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2
    g = np.array([-400 * x[0] * (x[1] - x[0] ** 2) - 2 * (1 - x[0]), 200 * (x[1] - x[0] ** 2)])
    return f, g


def test_rosenbrock_minimum():
    res = lbfgs_descent(_rosenbrock, np.array([-1.2, 1.0]), converged=lambda x, f, g: np.max(np.abs(g)) < 1e-10)
    assert res.status == "converged"
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-8)


def test_preconditioned_quadratic_matches_linear_solve():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((30, 30))
    H = A @ A.T + 30 * np.eye(30)
    b = rng.standard_normal(30)
    Hinv = np.linalg.inv(np.diag(np.diag(H)))
    res = lbfgs_descent(
        lambda x: (0.5 * x @ H @ x - b @ x, H @ x - b),
        np.zeros(30),
        converged=lambda x, f, g: np.linalg.norm(g) < 1e-12,
        precond=lambda g: Hinv @ g,
    )
    np.testing.assert_allclose(res.x, np.linalg.solve(H, b), atol=1e-10)


def test_admissibility_keeps_iterates_in_region():
    # minimum of (x - 2)**2 lies outside x <= 1; steps must stop short of the wall
    seen = []
    res = lbfgs_descent(
        lambda x: (float((x[0] - 2) ** 2), np.array([2 * (x[0] - 2)])),
        np.array([0.0]),
        converged=lambda x, f, g: False,
        admissible=lambda old, new: new[0] <= 1.0,
        max_iter=60,
        callback=lambda it, x, f, g: seen.append(x[0]),
    )
    assert max(seen) <= 1.0
    assert res.x[0] == pytest.approx(1.0, abs=1e-3)


def test_max_iterations_status():
    res = lbfgs_descent(_rosenbrock, np.array([-1.2, 1.0]), converged=lambda x, f, g: False, max_iter=3)
    assert res.status == "max-iterations"
    assert res.nit == 3
