"""Independent oracles and fuzzers shared by the topology and acceptance tests."""
from fractions import Fraction

import numpy as np

from ncenter.model import CenterSystem, CollisionError, PeriodicLoop
from ncenter.topology import NonGenericError, homotopy_word, reduce_word, representative, self_intersections

TWO = CenterSystem([1.0, 1.0], [[-0.5, 0.0], [0.5, 0.0]], 1.5)
THREE = CenterSystem([1.0, 1.0, 1.0], [[-1.0, 0.0], [0.2, 0.1], [1.1, -0.2]], 1.0)


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def brute_crossings(nodes):
    """Proper crossings of non-adjacent segments in exact rational arithmetic."""
    P = [(Fraction(x), Fraction(y)) for x, y in nodes]
    n = len(P)
    seg = [(P[i], P[(i + 1) % n]) for i in range(n)]
    out = set()
    degenerate = False
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            (a, b), (c, d) = seg[i], seg[j]
            o = [_orient(a, b, c), _orient(a, b, d), _orient(c, d, a), _orient(c, d, b)]
            if 0 in o:
                degenerate = True
            if o[0] * o[1] < 0 and o[2] * o[3] < 0:
                out.add((i, j))
    return out, degenerate


def fuzz_polygon(seed):
    rng = np.random.default_rng(seed)
    kind = seed % 3
    n = int(rng.integers(4, 26))
    if kind == 0:
        return rng.uniform(-1, 1, (n, 2))
    if kind == 1:
        # star-like loops winding several times
        th = np.linspace(0, 2 * np.pi * rng.integers(1, 4), n, endpoint=False) + rng.uniform(0, 2 * np.pi) + 0.05 * rng.standard_normal(n)
        r = 1 + 0.6 * rng.uniform(-1, 1, n)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    # small perturbations of a circle with a few large jumps
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = np.stack([np.cos(th), np.sin(th)], axis=1) + 0.05 * rng.standard_normal((n, 2))
    k = rng.integers(0, n, 2)
    pts[k] = rng.uniform(-1.5, 1.5, (2, 2))
    return pts


def fuzz_representative(seed):
    rng = np.random.default_rng(seed)
    while True:
        n = int(rng.integers(1, 6))
        ls = [(int(rng.integers(1, 4)), int(rng.choice([1, -1]))) for _ in range(n)]
        w = reduce_word(ls)
        if not w.is_trivial:
            break
    loop = representative(w, THREE, variant=int(rng.integers(0, 3)), seed=seed)
    # wiggle to add excess crossings without moving across a center
    bump = 0.02 * rng.standard_normal(loop.nodes.shape)
    nodes = loop.nodes + bump
    try:
        if homotopy_word(nodes, THREE).same_class(w):
            self_intersections(nodes)
            return w, PeriodicLoop(loop.period, nodes)
    except (NonGenericError, CollisionError):
        pass
    return w, loop
