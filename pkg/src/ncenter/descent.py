"""Limited-memory quasi-Newton descent with an admissibility-aware line search.

Topological constraints (a curve must not sweep across a center) are not
expressible as smooth constraints, so they are enforced by obstruction: the
backtracking line search rejects any trial point the caller's
``admissible(x_old, x_new)`` predicate refuses.  Accepted steps satisfy the
Armijo condition, or, once the decrease is lost in round-off, its
derivative form (the approximate Armijo test of Hager and Zhang), so the
objective never increases by more than its evaluation noise.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = ["DescentResult", "lbfgs_descent"]


@dataclass
class DescentResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    nit: int
    status: str  # "converged" | "stalled" | "max-iterations" | "line-search-failure"
    history: list = field(default_factory=list, repr=False)


def lbfgs_descent(
    fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    *,
    converged: Callable[[np.ndarray, float, np.ndarray], bool],
    admissible: Optional[Callable[[np.ndarray, np.ndarray], bool]] = None,
    precond: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_iter: int = 10000,
    memory: int = 12,
    armijo: float = 1e-4,
    shrink: float = 0.5,
    min_step: float = 1e-18,
    stall_window: int = 50,
    stall_rtol: float = 1e-15,
    noise_rtol: float = 1e-13,
    callback: Optional[Callable[[int, np.ndarray, float, np.ndarray], None]] = None,
) -> DescentResult:
    """Minimize ``f`` starting from ``x0``.

    ``precond`` applies an approximate inverse Hessian to a gradient and
    seeds every two-loop recursion; without it the usual ``s.y / y.y``
    scaling is used.  Objective values of ``inf`` or ``nan`` are rejected
    like inadmissible points.  The run is declared ``"stalled"`` when over
    ``stall_window`` accepted steps the objective drops by less than
    ``stall_rtol * |f|`` and the largest gradient entry fails to halve.
    """
    x = np.array(x0, dtype=float).ravel()
    f, g = fun_grad(x)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    mem: deque = deque(maxlen=memory)
    history = [f]
    gmax = [float(np.max(np.abs(g)))]
    step0 = 1.0
    fresh = True

    for it in range(max_iter):
        if converged(x, f, g):
            return DescentResult(x, f, g, it, "converged", history)

        d = -_two_loop(g, mem, precond)
        slope = float(g @ d)
        if slope >= 0:
            mem.clear()
            d = -(precond(g) if precond is not None else g)
            slope = float(g @ d)
        if fresh and precond is None:
            step = min(1.0, 1.0 / max(np.linalg.norm(d), 1e-300))
        else:
            step = step0

        accepted = False
        while step > min_step:
            x_new = x + step * d
            if admissible is None or admissible(x, x_new):
                f_new, g_new = fun_grad(x_new)
                if np.isfinite(f_new):
                    if f_new <= f + armijo * step * slope:
                        accepted = True
                        break
                    if (
                        f_new <= f + noise_rtol * abs(f)
                        and float(g_new @ d) <= (2 * armijo - 1) * slope
                    ):
                        accepted = True
                        break
            step *= shrink

        if not accepted:
            if mem:
                mem.clear()
                fresh = True
                continue
            return DescentResult(x, f, g, it, "line-search-failure", history)

        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            mem.append((s, y, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        history.append(f)
        gmax.append(float(np.max(np.abs(g))))
        fresh = False
        step0 = 1.0
        if callback is not None:
            callback(it, x, f, g)
        if (
            len(history) > stall_window
            and history[-stall_window - 1] - f <= stall_rtol * abs(f)
            and min(gmax[-stall_window:]) > 0.5 * gmax[-stall_window - 1]
        ):
            return DescentResult(x, f, g, it + 1, "stalled", history)

    status = "converged" if converged(x, f, g) else "max-iterations"
    return DescentResult(x, f, g, max_iter, status, history)


def _two_loop(g, mem, precond):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(mem):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if precond is not None:
        r = precond(q)
    elif mem:
        s, y, _ = mem[-1]
        r = (float(s @ y) / float(y @ y)) * q
    else:
        r = q
    for (s, y, rho), a in zip(mem, reversed(alphas)):
        b = rho * float(y @ r)
        r += (a - b) * s
    return r
