"""Acceptance criteria at their stated tolerances.

Each test records one verdict through the ``acceptance`` fixture; the
verdicts are printed as one PASS/FAIL line per criterion in the terminal
summary.  A criterion that is not met fails its test.
"""
import time

import numpy as np
import pytest

from ncenter.fixtures import axis_bounce
from ncenter.kepler import (
    ObstacleSpec,
    ParabolicEjection,
    action_scaling,
    angular_sweep_arcsin_ratio,
    fixed_end_minimize,
    grazing_arc_sweep_numeric,
    obstacle_minimize,
    parabolic_arc,
    parabolic_point,
    parabolic_velocity,
    total_grazing_sweep,
)
from ncenter.minimize import MinimizeOptions, Status, classify_outcome, multistart
from ncenter.model import CenterSystem, OpenArc, integrate_trajectory
from ncenter.regularize import asymptotic_fit, collision_arc, collision_state, integrate_lc, lc_forward, lc_inverse, reflection_test
from ncenter.topology import homotopy_word, is_admissible, make_taut, reduce_word, self_intersections

from oracles import THREE, TWO, brute_crossings, fuzz_polygon, fuzz_representative

SWEEP_ALPHAS = (1.0, 1.25, 1.5, 1.75)


def _finish(record, number, passed, detail):
    record(number, passed, detail)
    assert passed, detail


def test_criterion_01_sweep_closed_form(acceptance):
    start = time.perf_counter()
    ratios = np.linspace(0.05, 0.95, 20)
    alphas = np.union1d(np.linspace(SWEEP_ALPHAS[0], SWEEP_ALPHAS[-1], 20), SWEEP_ALPHAS)
    worst, where = 0.0, None
    for a in alphas:
        for q in ratios:
            err = abs(grazing_arc_sweep_numeric(q, 1.0, a) - angular_sweep_arcsin_ratio(q, 1.0, a))
            if err > worst:
                worst, where = err, (a, q)
    elapsed = time.perf_counter() - start
    passed = worst < 1e-6 and elapsed < 10.0
    detail = f"max |numeric - closed form| = {worst:.3e} at alpha={where[0]:.4g}, ratio={where[1]:.3g}; {elapsed:.2f} s"
    _finish(acceptance, 1, passed, detail)


def test_criterion_02_limiting_total_sweep(acceptance):
    results = []
    for alpha in (1.0, 1.5):
        total = total_grazing_sweep(alpha, 1e-4)
        limit = 2 * np.pi / (2 - alpha)
        results.append((alpha, total, limit, abs(total - limit)))
    passed = all(err < 1e-3 for *_, err in results)
    detail = "; ".join(f"alpha={a:g}: sweep {s:.6f} vs {lim:.6f} (err {e:.2e})" for a, s, lim, e in results)
    _finish(acceptance, 2, passed, detail)


def test_criterion_03_collision_asymptotics(acceptance):
    start = time.perf_counter()
    worst_parabolic, worst_collision = 0.0, 0.0
    for alpha in (1.0, 1.5):
        pe = ParabolicEjection(1.0, alpha)
        t = np.geomspace(1e-6, 1e-2, 200)
        arc = OpenArc(t, parabolic_point(pe, t), parabolic_velocity(pe, t))
        fits = {f.quantity: f for f in asymptotic_fit(arc, pe.system(), t0=0.0)}
        assert fits["I"].expected_exponent == pytest.approx(4 / (2 + alpha))
        assert fits["V"].expected_exponent == pytest.approx(-2 * alpha / (2 + alpha))
        worst_parabolic = max(worst_parabolic, fits["I"].relative_error, fits["V"].relative_error)

        sys = CenterSystem([1.0, 1.0], [[-0.5, 0.0], [0.5, 0.0]], alpha)
        y = collision_arc(sys, 0, 2.0, 0.0, 1e-7, 0.05, 300)
        fits = {f.quantity: f for f in asymptotic_fit(y, sys, t0=0.0, k=0)}
        worst_collision = max(worst_collision, fits["I"].relative_error, fits["V"].relative_error)
    elapsed = time.perf_counter() - start
    passed = worst_parabolic < 0.01 and worst_collision < 0.03 and elapsed < 30.0
    detail = f"parabolic max rel err {worst_parabolic:.2e} (< 1e-2), two-center {worst_collision:.2e} (< 3e-2); {elapsed:.2f} s"
    _finish(acceptance, 3, passed, detail)


def test_criterion_04_rescaling_law(acceptance):
    lambdas = np.geomspace(1e-3, 1.0, 13)
    lines, passed = [], True
    for alpha in (1.0, 1.5):
        pe = ParabolicEjection(1.0, alpha, 0.0, 2.0)
        fit = action_scaling(parabolic_arc(pe, 1.0, 400), pe.system(), lambdas)
        agree = fit.agreement(1e-6)
        ok = fit.r_squared > 1 - 1e-9 and sum(agree.values()) == 1
        passed &= ok
        lines.append(
            f"alpha={alpha:g}: exponent {fit.exponent:.9f}, R^2 1-{1 - fit.r_squared:.1e}, "
            f"-(2-a)/(2+a)={fit.homogeneity_exponent:.9f} {'agrees' if agree['homogeneity'] else 'differs'}, "
            f"-2/(2+a)={fit.position_exponent:.9f} {'agrees' if agree['position'] else 'differs'}"
        )
    _finish(acceptance, 4, passed, "; ".join(lines))


def test_criterion_05_fixed_end_improvement(acceptance):
    start = time.perf_counter()
    a = fixed_end_minimize(ParabolicEjection(1.0, 1.5, 0.0, 2 * np.pi), 1.0, n=512)
    b = fixed_end_minimize(ParabolicEjection(1.0, 1.0, 0.0, np.pi), 1.0, n=512)
    c = fixed_end_minimize(ParabolicEjection(1.0, 1.0, 0.0, 2 * np.pi), 1.0, n=512)
    c2 = fixed_end_minimize(ParabolicEjection(1.0, 1.0, 0.0, 2 * np.pi), 1.0, n=1024)
    elapsed = time.perf_counter() - start
    checks = [
        a.action < a.ejection_action and a.relative_margin > 1e-3,
        b.action < b.ejection_action,
        0 < c.relative_margin < 1e-2,
        c2.relative_margin < c.relative_margin,
        elapsed < 120.0,
    ]
    detail = (
        f"alpha=1.5,2pi margin {a.relative_margin:.4f}; alpha=1,pi margin {b.relative_margin:.4f}; "
        f"alpha=1,2pi margin {c.relative_margin:.2e} (n=512) -> {c2.relative_margin:.2e} (n=1024); {elapsed:.1f} s"
    )
    _finish(acceptance, 5, all(checks), detail)


def test_criterion_06_obstacle_structure(acceptance):
    pe = ParabolicEjection(1.0, 1.5, 0.0, 2 * np.pi)
    R = float(pe.radius(1.0))
    res = obstacle_minimize(ObstacleSpec(0.5 * R, 1.0), pe, 512)
    J = res.off_contact_momentum()
    spread = float(np.ptp(J) / np.max(np.abs(J)))
    contact = float(np.mean(res.contact_momentum()))
    rel = abs(contact - res.predicted_contact_momentum) / abs(res.predicted_contact_momentum)
    n_int = len(res.contact_intervals)
    passed = n_int == 1 and spread < 1e-6 and rel < 1e-4
    detail = f"{n_int} contact interval(s); off-contact momentum spread {spread:.2e}; contact value rel err {rel:.2e}"
    _finish(acceptance, 6, passed, detail)


def test_criterion_07_two_center_minimizer(acceptance, two_centers):
    start = time.perf_counter()
    best = multistart("a1 a2", two_centers, 2 * np.pi, MinimizeOptions(), n=256).best
    elapsed = time.perf_counter() - start
    passed = (
        best.status == Status.COLLISION_FREE
        and best.eom_residual < 1e-3
        and best.energy.relative_drift < 1e-4
        and list(best.winding) == [1, 1]
        and best.class_check.same_class(reduce_word("a1 a2"))
        and elapsed < 120.0
    )
    detail = (
        f"{best.status.value}, eom residual {best.eom_residual:.2e}, energy drift {best.energy.relative_drift:.2e}, "
        f"winding {[int(v) for v in best.winding]}, word {best.class_check}; {elapsed:.1f} s"
    )
    _finish(acceptance, 7, passed, detail)


def test_criterion_08_reflection_detection(acceptance):
    fx = axis_bounce()
    verdict = reflection_test(fx.arc, fx.system)
    cls = classify_outcome(fx.loop, fx.system, word="a1 A2")
    refl = cls.reflection
    passed = (
        verdict.kind == "Reflection"
        and verdict.residual < 1e-4
        and cls.status == Status.REFLECTION
        and refl is not None
        and {refl.k1, refl.k2} == {0, 1}
        and refl.off_winding == (0, 0)
        and refl.winding_ok
    )
    detail = (
        f"{verdict.kind}, z' antisymmetry residual {verdict.residual:.2e}; {cls.status.value} between centers "
        f"{None if refl is None else (refl.k1 + 1, refl.k2 + 1)}, winding off them {None if refl is None else refl.off_winding}"
    )
    _finish(acceptance, 8, passed, detail)


def test_criterion_09_topology(acceptance):
    mismatches = 0
    for seed in range(500):
        nodes = fuzz_polygon(seed)
        expected, _ = brute_crossings(nodes)
        got = {(min(c.seg_a, c.seg_b), max(c.seg_a, c.seg_b)) for c in self_intersections(nodes).crossings}
        mismatches += got != expected
    taut_bad = 0
    for seed in range(100):
        w, loop = fuzz_representative(seed)
        res = make_taut(loop, THREE, details=True)
        if res.crossings_after > res.crossings_before or not homotopy_word(res.loop, THREE).same_class(w):
            taut_bad += 1
    verdicts = tuple(is_admissible(w, TWO).admissible for w in ("a1 a2", "a1", "a1 A2"))
    passed = mismatches == 0 and taut_bad == 0 and verdicts == (True, False, False)
    detail = f"{mismatches}/500 crossing mismatches; {taut_bad}/100 taut failures; admissible(a1 a2, a1, a1 A2) = {verdicts}"
    _finish(acceptance, 9, passed, detail)


def test_criterion_10_levi_civita(acceptance):
    sys2 = CenterSystem([1.0, 0.7], [[-0.5, 0.0], [0.5, 0.0]], 1.0)
    arc = integrate_trajectory([-0.2, 0.6], [0.3, -0.4], (0.0, 1.0), sys2, t_eval=np.linspace(0, 1, 301))
    worst_trip = 0.0
    for k in (0, 1):
        back = lc_inverse(lc_forward(arc, sys2, k=k), sys2, t0=arc.times[0])
        worst_trip = max(worst_trip, np.max(np.abs(back.points - arc.points)) / np.max(np.abs(arc.points)))

    one = CenterSystem([1.0], [[0.0, 0.0]], 1.0)
    mu = 3 * np.sqrt(0.5)
    st = collision_state(one, 0, 0.3, 0.0)
    s_hi = 1.5 * (3.0 / abs(complex(*st.zprime)) ** 2) ** (1 / 3)
    radial, covers = 0.0, True
    for end in (-s_hi, s_hi):
        fall = lc_inverse(integrate_lc(st, one, (0.0, end), s_eval=np.linspace(0.0, end, 1001)), one)
        t = fall.times
        covers &= bool(np.max(np.abs(t)) >= 1.0 and np.min(np.abs(t)) == 0.0)
        sel = (np.abs(t) <= 1.0) & (t != 0.0)
        r = np.linalg.norm(fall.points[sel], axis=1)
        radial = max(radial, float(np.max(np.abs(r / (mu * np.abs(t[sel])) ** (2 / 3) - 1))))
    passed = worst_trip < 1e-9 and radial < 1e-6 and covers
    detail = f"round trip rel err {worst_trip:.2e}; radial |y| vs (mu|t|)^(2/3) rel err {radial:.2e} over t in [-1, 1]"
    _finish(acceptance, 10, passed, detail)
