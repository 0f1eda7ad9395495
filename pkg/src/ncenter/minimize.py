"""Action minimization over loops in a fixed free homotopy class.

Loops are polygons sampled at uniform times.  The discrete action is
minimized by a preconditioned L-BFGS descent whose line search refuses any
step during which a segment would sweep across a center, or which would
bring the loop within ``collision_radius`` times the minimum center spacing
of a center.  Deformations that never cross a center preserve the class, so
every iterate stays in the class of the seed.

A trapezoid-rule critical point satisfies the discrete equation of motion
``(x[k+1] - 2 x[k] + x[k-1]) / dt**2 = grad V(x[k])`` exactly, so the
residual of that equation measures only optimization error.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .descent import lbfgs_descent
from .model import (
    CenterSystem,
    CollisionError,
    EnergyRecord,
    PeriodicLoop,
    action,
    action_gradient,
    energy,
    eom_residual,
    min_center_distance,
    segments_sweep_point,
)
from .topology import HomotopyWord, homotopy_word, make_taut, reduce_word, representative, winding_vector

__all__ = [
    "Status",
    "MinimizeOptions",
    "ReflectionData",
    "Classification",
    "MinimizeOutcome",
    "RunRecord",
    "MultistartResult",
    "seed_loop",
    "perturb_loop",
    "minimize_action",
    "classify_outcome",
    "multistart",
    "write_log_csv",
]


class Status(str, Enum):
    COLLISION_FREE = "CollisionFreeSolution"
    REFLECTION = "CollisionReflectionCandidate"
    NEAR_COLLISION = "Boundary(NearCollision)"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class MinimizeOptions:
    """Settings of :func:`minimize_action` and :func:`multistart`.

    Descent stops once the largest node gradient falls below
    ``grad_tol * action / loop length``.  A converged loop counts as a
    solution when its equation-of-motion residual is below ``eom_tol``.
    """

    max_iters: int = 20000
    grad_tol: float = 1e-9
    armijo: float = 1e-4
    shrink: float = 0.5
    memory: int = 12
    collision_radius: float = 1e-3
    restarts: int = 8
    seed: int = 0
    rule: str = "trapezoid"
    eom_tol: float = 1e-3
    symmetry_tol: float = 1e-3
    word_check_every: int = 10
    perturbation: float = 0.1

    def __post_init__(self):
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")
        if not 0 < self.collision_radius < 0.5:
            raise ValueError("collision_radius must lie in (0, 0.5)")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass(frozen=True)
class ReflectionData:
    """A loop bouncing between centers ``k1`` and ``k2`` (0-based) with half period ``T_bar``.

    ``off_winding`` is the loop's winding about every other center; a
    collision-reflection loop must have it identically zero.
    """

    k1: int
    k2: int
    T_bar: float
    symmetry_residual: float
    off_winding: tuple
    word_winding_ok: Optional[bool] = None

    @property
    def winding_ok(self) -> bool:
        return not any(self.off_winding) and self.word_winding_ok is not False


@dataclass(frozen=True)
class Classification:
    status: Status
    reflection: Optional[ReflectionData]
    min_distance: float
    eom_residual: float


@dataclass
class MinimizeOutcome:
    status: Status
    loop: PeriodicLoop
    action_value: float
    eom_residual: float
    class_check: HomotopyWord
    reflection_data: Optional[ReflectionData] = None
    iterations: int = 0
    descent_status: str = ""
    min_distance: float = float("nan")
    energy: Optional[EnergyRecord] = None
    winding: Optional[np.ndarray] = None
    log: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "action": self.action_value,
            "eom_residual": self.eom_residual,
            "energy_h": None if self.energy is None else self.energy.h,
            "energy_relative_drift": None if self.energy is None else self.energy.relative_drift,
            "min_distance": self.min_distance,
            "iterations": self.iterations,
            "descent_status": self.descent_status,
            "word": str(self.class_check),
            "winding": None if self.winding is None else [int(v) for v in self.winding],
            "reflection": None
            if self.reflection_data is None
            else {
                "k1": self.reflection_data.k1 + 1,
                "k2": self.reflection_data.k2 + 1,
                "T_bar": self.reflection_data.T_bar,
                "symmetry_residual": self.reflection_data.symmetry_residual,
                "winding_ok": self.reflection_data.winding_ok,
            },
        }


def _resample(points: np.ndarray, n: int) -> np.ndarray:
    """``n`` points equally spaced by arclength along a closed polygon."""
    closed = np.vstack([points, points[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    target = np.linspace(0.0, s[-1], n, endpoint=False)
    return np.column_stack([np.interp(target, s, closed[:, 0]), np.interp(target, s, closed[:, 1])])


def seed_loop(word, sys: CenterSystem, T: float = 2 * np.pi, n: int = 256, seed: int = 0) -> PeriodicLoop:
    """Initial loop spelling ``word``: a taut representative at constant speed.

    The representative is built letter by letter around the centers, its
    excess crossings removed, then resampled at ``n`` nodes equally spaced
    in arclength and smoothed while staying in the class.

    Raises
    ------
    ValueError
        For the trivial word, or if the resampled loop leaves the class.
    """
    w = reduce_word(word)
    if w.is_trivial:
        raise ValueError("the trivial class has no action minimizer")
    rep = make_taut(representative(w, sys, seed=seed), sys)
    nodes = _resample(rep.nodes, n)
    loop = PeriodicLoop(T, nodes)
    if not homotopy_word(loop, sys).same_class(w):
        raise ValueError("seed construction failed: resampled loop left the class; increase n")
    return _smooth(loop, sys, sweeps=n // 8)


def _smooth(loop: PeriodicLoop, sys: CenterSystem, sweeps: int) -> PeriodicLoop:
    """Laplacian smoothing steps, each kept only if it sweeps no center."""
    x = loop.nodes.copy()
    floor = 0.05 * _spacing(sys)
    for _ in range(sweeps):
        y = 0.5 * x + 0.25 * (np.roll(x, 1, axis=0) + np.roll(x, -1, axis=0))
        if _sweeps(x, y, sys) or min_center_distance(PeriodicLoop(loop.period, y), sys) < floor:
            break
        x = y
    return PeriodicLoop(loop.period, x)


def _spacing(sys: CenterSystem) -> float:
    return sys.min_spacing if np.isfinite(sys.min_spacing) else 1.0


def _sweeps(x_old: np.ndarray, x_new: np.ndarray, sys: CenterSystem) -> bool:
    a0, b0 = x_old, np.roll(x_old, -1, axis=0)
    a1, b1 = x_new, np.roll(x_new, -1, axis=0)
    return any(segments_sweep_point(a0, b0, a1, b1, c) for c in sys.positions)


def perturb_loop(loop: PeriodicLoop, sys: CenterSystem, rng: np.random.Generator, amplitude: float) -> PeriodicLoop:
    """Add a random smooth (low-mode Fourier) displacement that keeps the class.

    ``amplitude`` is relative to the minimum center spacing; it is halved
    until the straight-line deformation sweeps no center.
    """
    n = loop.n
    modes = min(6, n // 4)
    t = 2 * np.pi * np.arange(n) / n
    coef = rng.standard_normal((modes, 4)) / np.arange(1, modes + 1)[:, None]
    disp = np.zeros((n, 2))
    for m in range(modes):
        disp[:, 0] += coef[m, 0] * np.cos((m + 1) * t) + coef[m, 1] * np.sin((m + 1) * t)
        disp[:, 1] += coef[m, 2] * np.cos((m + 1) * t) + coef[m, 3] * np.sin((m + 1) * t)
    disp *= amplitude * _spacing(sys) / max(np.max(np.linalg.norm(disp, axis=1)), 1e-300)
    floor = 0.05 * _spacing(sys)
    for _ in range(40):
        y = loop.nodes + disp
        if not _sweeps(loop.nodes, y, sys) and min_center_distance(PeriodicLoop(loop.period, y), sys) > floor:
            return PeriodicLoop(loop.period, y)
        disp *= 0.5
    return loop


class _Problem:
    """Objective, obstruction and preconditioner for one minimization."""

    def __init__(self, seed: PeriodicLoop, sys: CenterSystem, opts: MinimizeOptions):
        self.sys = sys
        self.opts = opts
        self.T = seed.period
        self.n = seed.n
        self.dt = seed.dt
        self.r_min = opts.collision_radius * _spacing(sys)
        m = np.arange(self.n)
        self.lap = (2 - 2 * np.cos(2 * np.pi * m / self.n)) / self.dt
        self.shift = 1.0
        self.update_preconditioner(seed.nodes.ravel())

    def loop(self, z) -> PeriodicLoop:
        return PeriodicLoop(self.T, z.reshape(self.n, 2))

    def fun_grad(self, z):
        lp = self.loop(z)
        try:
            f = action(lp, self.sys, self.opts.rule)
            g = action_gradient(lp, self.sys, self.opts.rule)
        except CollisionError:
            return np.inf, np.zeros_like(z)
        return f, g.ravel()

    def admissible(self, z_old, z_new) -> bool:
        x_old = z_old.reshape(self.n, 2)
        x_new = z_new.reshape(self.n, 2)
        if min_center_distance(PeriodicLoop(self.T, x_new), self.sys) <= self.r_min:
            return False
        return not _sweeps(x_old, x_new, self.sys)

    def update_preconditioner(self, z):
        """Shift the periodic Laplacian by the mean potential curvature along the loop."""
        x = z.reshape(self.n, 2)
        d = np.linalg.norm(x[:, None, :] - self.sys.positions[None], axis=-1)
        curv = np.sum((self.sys.alpha + 1) * self.sys.masses / d ** (self.sys.alpha + 2), axis=1)
        self.shift = float(np.mean(curv)) * self.dt + 1e-12 / self.dt

    def precondition(self, g):
        gh = np.fft.rfft(g.reshape(self.n, 2), axis=0)
        gh /= (self.lap[: gh.shape[0]] + self.shift)[:, None]
        return np.fft.irfft(gh, n=self.n, axis=0).ravel()


def minimize_action(seed: PeriodicLoop, sys: CenterSystem, opts: Optional[MinimizeOptions] = None, word=None) -> MinimizeOutcome:
    """Minimize the discrete action starting from ``seed`` within its class.

    The iterate's word is compared with the seed's every
    ``opts.word_check_every`` accepted steps and at the end.  The log holds
    ``(iteration, action, max gradient, min center distance)`` per accepted
    step.

    Raises
    ------
    CollisionError
        If the seed passes through a center.
    ValueError
        If the action of the seed is not finite.
    RuntimeError
        If the class changes (which the obstruction rules out).
    """
    opts = opts or MinimizeOptions()
    w0 = homotopy_word(seed, sys) if word is None else reduce_word(word)
    action(seed, sys, opts.rule)  # raises on collision
    prob = _Problem(seed, sys, opts)
    log = []

    def callback(it, z, f, g):
        gm = float(np.max(np.linalg.norm(g.reshape(-1, 2), axis=1)))
        log.append((it + 1, f, gm, min_center_distance(prob.loop(z), sys)))
        if (it + 1) % 20 == 0:
            prob.update_preconditioner(z)
        if opts.word_check_every and (it + 1) % opts.word_check_every == 0:
            if not homotopy_word(prob.loop(z), sys).same_class(w0):
                raise RuntimeError("homotopy class changed during descent")

    def converged(z, f, g):
        length = prob.loop(z).length()
        return float(np.max(np.linalg.norm(g.reshape(-1, 2), axis=1))) < opts.grad_tol * abs(f) / length

    res = lbfgs_descent(
        prob.fun_grad,
        seed.nodes.ravel(),
        converged=converged,
        admissible=prob.admissible,
        precond=prob.precondition,
        max_iter=opts.max_iters,
        memory=opts.memory,
        armijo=opts.armijo,
        shrink=opts.shrink,
        callback=callback,
    )
    loop = prob.loop(res.x)
    if not homotopy_word(loop, sys).same_class(w0):
        raise RuntimeError("homotopy class changed during descent")
    cls = classify_outcome(loop, sys, opts=opts, word=w0)
    status = cls.status
    if status == Status.COLLISION_FREE and res.status == "max-iterations":
        status = Status.MAX_ITERATIONS
    return MinimizeOutcome(
        status=status,
        loop=loop,
        action_value=float(res.f),
        eom_residual=cls.eom_residual,
        class_check=homotopy_word(loop, sys),
        reflection_data=cls.reflection,
        iterations=res.nit,
        descent_status=res.status,
        min_distance=cls.min_distance,
        energy=energy(loop, sys) if cls.min_distance > 0 else None,
        winding=winding_vector(loop, sys) if cls.min_distance > 0 else None,
        log=log,
    )


def _symmetry(x: np.ndarray, k0: int, half: bool) -> float:
    """``max_i |x[k0 + i (+1)] - x[k0 - i]|`` over the whole loop."""
    n = x.shape[0]
    i = np.arange(n)
    fwd = (k0 + i + (1 if half else 0)) % n
    bwd = (k0 - i) % n
    return float(np.max(np.linalg.norm(x[fwd] - x[bwd], axis=1)))


def classify_outcome(
    loop: PeriodicLoop,
    sys: CenterSystem,
    tol: Optional[float] = None,
    opts: Optional[MinimizeOptions] = None,
    word=None,
) -> Classification:
    """Classify a loop as a solution, a collision-reflection candidate or a boundary point.

    A loop within twice the collision radius of a center is tested for time
    symmetry about its closest node (or the midpoint after it): the symmetry
    residual relative to the loop diameter must be below ``tol``.  The half
    period ``T_bar`` is the time to the next node near a center, and the loop
    must repeat with period ``2 T_bar`` dividing ``T``.  Otherwise a
    near-collision loop is a boundary point.
    """
    opts = opts or MinimizeOptions()
    tol = opts.symmetry_tol if tol is None else tol
    x = loop.nodes
    n = loop.n
    dmin = min_center_distance(loop, sys)
    near = 2 * opts.collision_radius * _spacing(sys)
    if dmin > near:
        res = eom_residual(loop, sys)
        status = Status.COLLISION_FREE if res < opts.eom_tol else Status.MAX_ITERATIONS
        return Classification(status, None, dmin, res)

    dist = np.linalg.norm(x[:, None, :] - sys.positions[None], axis=-1)
    k0, k1 = np.unravel_index(np.argmin(dist), dist.shape)
    diam = float(np.max(np.ptp(x, axis=0)))
    scale = max(diam, 1e-300)
    refl = None
    sym_int, sym_half = _symmetry(x, k0, False), _symmetry(x, k0, True)
    half = sym_half < sym_int
    sym = min(sym_int, sym_half) / scale
    if sym < tol:
        close = np.min(dist, axis=1) <= near
        # next node near a center, searched over the first half of the loop
        offs = np.arange(1, n // 2 + 1)
        cand = [o for o in offs if close[(k0 + o) % n] and o >= 2]
        for o in cand:
            p = o - (0.5 if half else 0.0)
            m = n / (2 * p)
            if abs(m - round(m)) > 1e-9 or round(m) < 1:
                continue
            period_nodes = int(round(2 * p))
            rep = float(np.max(np.linalg.norm(np.roll(x, -period_nodes, axis=0) - x, axis=1))) / scale
            if rep > tol:
                continue
            k2 = int(np.argmin(dist[(k0 + o) % n]))
            others = [j for j in range(sys.n_centers) if j not in (k1, k2)]
            off = _off_winding(x, sys, others)
            word_ok = None
            if word is not None:
                ab = reduce_word(word).abelianization(sys.n_centers)
                word_ok = bool(np.all(ab[others] == 0))
            refl = ReflectionData(int(k1), k2, float(p * loop.dt), sym, tuple(int(v) for v in off), word_ok)
            break
    res = float("nan") if dmin == 0 else eom_residual(loop, sys)
    status = Status.REFLECTION if refl is not None else Status.NEAR_COLLISION
    return Classification(status, refl, dmin, res)


def _off_winding(x: np.ndarray, sys: CenterSystem, others: list) -> np.ndarray:
    if not others:
        return np.zeros(0, dtype=int)
    sub = CenterSystem(sys.masses[others], sys.positions[others], sys.alpha)
    return winding_vector(x, sub)


@dataclass(frozen=True)
class RunRecord:
    run: int
    seed: int
    status: str
    action: float
    eom_residual: float
    min_distance: float
    iterations: int


@dataclass
class MultistartResult:
    best: MinimizeOutcome
    runs: list
    outcomes: list = field(repr=False, default_factory=list)

    def table(self) -> list:
        return [r.__dict__ for r in self.runs]


def multistart(word, sys: CenterSystem, T: float = 2 * np.pi, opts: Optional[MinimizeOptions] = None, n: int = 256) -> MultistartResult:
    """Independent minimizations from perturbed seeds of one class.

    Run 0 starts from the unperturbed seed; run ``i`` perturbs it with a
    generator seeded by ``opts.seed + i``.  The best run is the least action
    among collision-free solutions, or the least action overall when there
    is none.

    Raises
    ------
    RuntimeError
        If every run fails.
    """
    opts = opts or MinimizeOptions()
    w = reduce_word(word)
    base = seed_loop(w, sys, T, n, seed=opts.seed)
    runs, outcomes = [], []
    for i in range(opts.restarts):
        rng = np.random.default_rng(opts.seed + i)
        start = base if i == 0 else perturb_loop(base, sys, rng, opts.perturbation)
        try:
            out = minimize_action(start, sys, opts, word=w)
        except (CollisionError, RuntimeError, ValueError) as exc:
            runs.append(RunRecord(i, opts.seed + i, f"failed: {exc}", float("nan"), float("nan"), float("nan"), 0))
            outcomes.append(None)
            continue
        runs.append(RunRecord(i, opts.seed + i, out.status.value, out.action_value, out.eom_residual, out.min_distance, out.iterations))
        outcomes.append(out)
    good = [o for o in outcomes if o is not None and np.isfinite(o.action_value)]
    if not good:
        raise RuntimeError("no run produced a finite action")
    free = [o for o in good if o.status == Status.COLLISION_FREE]
    best = min(free or good, key=lambda o: o.action_value)
    return MultistartResult(best, runs, outcomes)


LOG_COLUMNS = ("iteration", "action", "max_gradient", "min_center_distance")


def write_log_csv(outcome: MinimizeOutcome, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for row in outcome.log:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
