
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncenter.model import CenterSystem, CollisionError
from ncenter.topology import (
    HomotopyWord,
    NoSurgeryError,
    NonGenericError,
    TrivialClassError,
    WordSyntaxError,
    find_bigons,
    find_monogons,
    homotopy_word,
    innermost_subloops,
    is_admissible,
    make_taut,
    parse_word,
    ray_chamber,
    reduce_word,
    remove_monogon,
    representative,
    self_intersections,
    signed_area,
    subloops,
    winding_vector,
)

from oracles import THREE, TWO, brute_crossings, fuzz_polygon, fuzz_representative

letters = st.tuples(st.integers(1, 3), st.sampled_from([1, -1]))


# ---------------------------------------------------------------------------
# words


@pytest.mark.parametrize(
    "text, reduced",
    [
        ("A2 a1 a2", "a1"),
        ("a1 A1", ""),
        ("a1 a2 A2 a3", "a1 a3"),
        ("a3 a1 A3", "a1"),
        ("a1 a2 A1", "a2"),
        ("A12 a12 a7", "a7"),
    ],
)
def test_reduce_examples(text, reduced):
    assert str(reduce_word(text)) == reduced


def test_word_syntax():
    assert parse_word("a1 A2  a10") == [(1, 1), (2, -1), (10, 1)]
    for bad in ("b1", "a0", "a", "a1a2", "A-1"):
        with pytest.raises(WordSyntaxError):
            parse_word(bad)


@given(st.lists(letters, max_size=12))
def test_reduction_is_idempotent_and_keeps_abelianization(ls):
    w = reduce_word(ls)
    assert reduce_word(w) == w
    raw = np.zeros(3, int)
    for j, s in ls:
        raw[j - 1] += s
    np.testing.assert_array_equal(w.abelianization(3), raw)
    # no cancelling neighbours, cyclically
    n = len(w.letters)
    for i in range(n if n > 1 else 0):
        (j1, s1), (j2, s2) = w.letters[i], w.letters[(i + 1) % n]
        assert not (j1 == j2 and s1 == -s2)


@given(st.lists(letters, min_size=1, max_size=8), st.lists(letters, max_size=6))
def test_conjugates_share_a_class(ls, conj):
    w = reduce_word(ls)
    c = reduce_word(conj)
    conjugated = reduce_word(list(c.letters) + list(w.letters) + list(c.inverse().letters))
    assert conjugated.same_class(w)
    assert w.inverse().inverse() == w


# ---------------------------------------------------------------------------
# winding numbers


def _winding_oracle(nodes, c):
    w = (nodes[:, 0] - c[0]) + 1j * (nodes[:, 1] - c[1])
    return int(round(np.sum(np.angle(np.roll(w, -1) / w)) / (2 * np.pi)))


@settings(max_examples=60)
@given(st.integers(0, 100_000))
def test_winding_matches_angle_sum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 40))
    th = np.sort(rng.uniform(0, 2 * np.pi * rng.integers(1, 4), n))
    r = rng.uniform(0.2, 2.0, n)
    nodes = np.stack([r * np.cos(th), r * np.sin(th)], axis=1) + rng.normal(0, 0.3, 2)
    try:
        w = winding_vector(nodes, THREE)
    except CollisionError:
        return
    # the angle-sum oracle needs each segment to turn by less than pi about each center
    expected = [_winding_oracle(_refine(nodes, 50), c) for c in THREE.positions]
    np.testing.assert_array_equal(w, expected)


def _refine(nodes, k):
    b = np.roll(nodes, -1, axis=0)
    s = np.linspace(0, 1, k, endpoint=False)
    return (nodes[:, None, :] + s[None, :, None] * (b - nodes)[:, None, :]).reshape(-1, 2)


@given(st.lists(letters, min_size=1, max_size=6), st.integers(0, 20))
@settings(max_examples=40)
def test_winding_and_word_of_representatives(ls, shift):
    w = reduce_word(ls)
    if w.is_trivial:
        return
    loop = representative(w, THREE)
    assert homotopy_word(loop, THREE).same_class(w)
    wv = winding_vector(loop, THREE)
    np.testing.assert_array_equal(wv, w.abelianization(3))
    np.testing.assert_array_equal(winding_vector(loop.shifted(shift), THREE), wv)
    np.testing.assert_array_equal(winding_vector(loop.refined(), THREE), wv)
    assert homotopy_word(loop.refined(), THREE).same_class(w)


ALIGNED = CenterSystem([1.0, 1.0, 0.5, 0.5], [[-0.5, 0.0], [0.5, 0.0], [0.0, 1.0], [0.0, -1.0]], 1.0)


def test_ray_basis_is_fixed_by_centers_when_aligned():
    lo, hi, base = ray_chamber(ALIGNED)
    assert lo == 0.0 and 0.0 < base < hi
    assert ray_chamber(THREE)[2] == 0.0


@given(st.lists(st.tuples(st.integers(1, 4), st.sampled_from([1, -1])), min_size=1, max_size=5), st.integers(0, 50))
@settings(max_examples=40)
def test_words_on_aligned_centers(ls, seed):
    w = reduce_word(ls)
    if w.is_trivial:
        return
    for variant in (0, 1):
        loop = representative(w, ALIGNED, variant=variant, seed=seed)
        assert homotopy_word(loop, ALIGNED).same_class(w)


def test_winding_rejects_collision():
    with pytest.raises(CollisionError):
        winding_vector(np.array([[-0.5, 0.0], [1.0, 1.0], [1.0, -1.0]]), TWO)


# ---------------------------------------------------------------------------
# self-intersections against an exact oracle


def test_self_intersections_match_exact_oracle_on_500_polygons():
    for seed in range(500):
        nodes = fuzz_polygon(seed)
        expected, degenerate = brute_crossings(nodes)
        assert not degenerate
        rep = self_intersections(nodes)
        got = {(min(c.seg_a, c.seg_b), max(c.seg_a, c.seg_b)) for c in rep.crossings}
        assert got == expected, seed
        assert rep.count == len(expected)


def test_crossing_points_lie_on_both_segments():
    nodes = fuzz_polygon(1)
    rep = self_intersections(nodes)
    n = len(nodes)
    for c in rep.crossings:
        for seg, t in ((c.seg_a, c.t_a), (c.seg_b, c.t_b)):
            p = nodes[seg] + t * (nodes[(seg + 1) % n] - nodes[seg])
            np.testing.assert_allclose(p, c.point, atol=1e-12)


def test_nongeneric_loop_is_rejected():
    # a node sitting exactly on another segment
    nodes = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.5, -1.0]])
    with pytest.raises(NonGenericError):
        self_intersections(nodes)


def test_signed_area_orientation():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert signed_area(sq) == pytest.approx(1.0)
    assert signed_area(sq[::-1]) == pytest.approx(-1.0)


# ---------------------------------------------------------------------------
# sub-loops and surgery


def _figure_eight(n=80):
    th = 2 * np.pi * (np.arange(n) + 0.05) / n
    return np.stack([np.sin(th), 0.5 * np.sin(2 * th)], axis=1)


def test_figure_eight_subloops():
    loop = _figure_eight()
    sl = subloops(loop, TWO)
    assert len(sl) == 2
    inner = innermost_subloops(loop, TWO)
    assert len(inner) == 2
    assert sorted(tuple(sorted(s.enclosed_centers)) for s in inner) == [(0,), (1,)]


def test_monogon_removal():
    # circle around center 1 with a small empty kink
    th = np.linspace(0, 2 * np.pi, 60, endpoint=False) + 0.01
    nodes = np.stack([-0.5 + 0.4 * np.cos(th), 0.4 * np.sin(th)], axis=1)
    kink = np.array([[-0.1, 0.05], [0.05, 0.0], [0.0, -0.05], [-0.13, 0.0]])
    nodes = np.vstack([nodes[:1], kink, nodes[1:]])
    assert self_intersections(nodes).count >= 1
    assert find_monogons(nodes, TWO)
    out = remove_monogon(nodes, TWO)
    assert self_intersections(out).count < self_intersections(nodes).count
    assert homotopy_word(out, TWO).same_class(HomotopyWord.parse("a1"))
    with pytest.raises(NoSurgeryError):
        remove_monogon(_figure_eight(), TWO)


def test_no_bigons_on_taut_figure_eight():
    assert find_bigons(_figure_eight(), TWO) == []


def test_make_taut_preserves_word_on_100_representatives():
    for seed in range(100):
        w, loop = fuzz_representative(seed)
        before = self_intersections(loop).count
        res = make_taut(loop, THREE, details=True)
        assert res.crossings_before == before
        assert res.crossings_after <= before
        assert homotopy_word(res.loop, THREE).same_class(w), (seed, str(w))


@pytest.mark.parametrize(
    "word, crossings",
    [("a1 a1", 1), ("a1 a1 a1", 2), ("a1 a1 a1 a1", 3), ("a1 A2", 1), ("a1 A2 a1 A2", 5), ("a1 A2 a1 A2 a1 A2", 11), ("a1 a2 a1 a2 a1 a2", 2), ("a1 a2", 0)],
)
def test_taut_crossing_numbers_follow_power_formula(word, crossings):
    # a primitive class with minimal crossing number i has i(k) = k**2 i + k - 1
    taut = make_taut(representative(word, TWO), TWO)
    assert self_intersections(taut).count == crossings


def test_commutator_tightens_to_three_crossings():
    taut = make_taut(representative("a1 a2 A1 A2", TWO), TWO)
    assert self_intersections(taut).count == 3


# ---------------------------------------------------------------------------
# admissibility


@pytest.mark.parametrize("word, expected", [("a1 a2", True), ("a1", False), ("a1 A2", False), ("a1 a2 a1 a2", True)])
def test_admissibility_fixture(word, expected):
    res = is_admissible(word, TWO, cross_check=True)
    assert res.admissible is expected
    assert res.cross_check is expected
    if not expected:
        assert len(res.witness.enclosed_centers) < 2


def test_trivial_class_has_no_verdict():
    with pytest.raises(TrivialClassError):
        is_admissible("a1 A1", TWO)
    with pytest.raises(ValueError):
        representative("a3", TWO)
