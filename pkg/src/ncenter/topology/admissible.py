"""Admissibility of a free homotopy class.

A class is admissible when every innermost sub-loop of a taut generic
representative encloses at least two centers.  The representative is built
directly from the word (one narrow U-shaped excursion around a center per
letter, joined above all centers), then made taut by surgery.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..model import CenterSystem, PeriodicLoop
from .crossings import NonGenericError, SubLoop, innermost_subloops, self_intersections
from .invariants import homotopy_word, ray_chamber
from .taut import make_taut
from .words import HomotopyWord, reduce_word

__all__ = ["AdmissibilityResult", "TrivialClassError", "representative", "is_admissible"]


class TrivialClassError(ValueError):
    """Raised for the trivial (contractible) class."""


@dataclass(frozen=True)
class AdmissibilityResult:
    """Verdict with the taut representative it was read from.

    ``witness`` is an innermost sub-loop enclosing fewer than two centers
    (``None`` when admissible).  ``cross_check`` is the verdict on a second,
    independently built representative when requested.
    """

    admissible: bool
    word: HomotopyWord
    witness: Optional[SubLoop]
    taut_loop: PeriodicLoop
    innermost: tuple
    cross_check: Optional[bool] = None

    def __bool__(self) -> bool:
        return self.admissible


def representative(word, sys: CenterSystem, variant: int = 0, period: float = 1.0, seed: int = 0) -> PeriodicLoop:
    """A generic polygon in the class of ``word``.

    The loop is drawn in the frame where the word-reading rays point
    straight down.  Letter ``k`` becomes a U-shaped excursion that descends
    beside its center, passes just below it (left to right for ``a<j>``),
    crossing only that center's ray, and climbs back to height level ``k``
    above all centers.  Repeated letters of one center nest with decreasing
    widths.  ``variant`` rotates the word and changes the widths and heights,
    giving independently drawn representatives of the same class.

    Raises
    ------
    TrivialClassError
        For the trivial word.
    """
    w = reduce_word(word)
    if w.is_trivial:
        raise TrivialClassError("trivial class has no admissibility verdict")
    if w.max_generator > sys.n_centers:
        raise ValueError(f"word uses generator {w.max_generator} but there are {sys.n_centers} centers")
    letters = list(w.letters)
    if variant:
        r = variant % len(letters)
        letters = letters[r:] + letters[:r]
    theta = ray_chamber(sys)[2]
    rot = np.array([[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]])
    c = sys.positions @ rot.T
    if sys.n_centers > 1:
        gap = float(np.min(np.diff(np.sort(c[:, 0]))))
        size = float(np.max(np.ptp(c, axis=0)))
    else:
        gap = size = 1.0
    half = (0.25 if variant % 2 == 0 else 0.18) * gap
    counts = {j: sum(1 for jj, _ in letters if jj == j) for j, _ in letters}
    seen = {j: 0 for j in counts}
    top = float(np.max(c[:, 1])) + (0.5 + 0.3 * (variant % 3)) * max(size, gap)
    step = (0.1 + 0.05 * (variant % 2)) * max(size, gap) / len(letters)
    pts = []
    for k, (j, s) in enumerate(letters):
        cj = c[j - 1]
        o = seen[j]
        seen[j] += 1
        wid = half * (1.0 - 0.5 * o / counts[j])
        depth = wid
        yk = top + k * step
        left = [cj[0] - wid, yk], [cj[0] - wid, cj[1] - depth]
        right = [cj[0] + wid, cj[1] - depth], [cj[0] + wid, yk]
        path = [*left, *right] if s > 0 else [right[1], right[0], left[1], left[0]]
        pts.extend(path)
    pts = np.asarray(pts, float)
    rng = np.random.default_rng(seed + 7919 * variant)
    pts = pts + 1e-3 * half * rng.standard_normal(pts.shape)
    return PeriodicLoop(period, pts @ rot)


def is_admissible(word: Union[str, HomotopyWord], sys: CenterSystem, cross_check: bool = False) -> AdmissibilityResult:
    """True iff every innermost sub-loop of a taut representative encloses two or more centers.

    With ``cross_check`` a second representative (rotated word, other
    widths and heights) is built and tested as well; its verdict is
    reported alongside.

    Raises
    ------
    TrivialClassError
        For the trivial word.
    """
    w = reduce_word(word)
    verdict = _verdict(w, sys, 0)
    if cross_check:
        other = _verdict(w, sys, 1)
        return AdmissibilityResult(verdict.admissible, w, verdict.witness, verdict.taut_loop, verdict.innermost, other.admissible)
    return verdict


def _verdict(w: HomotopyWord, sys: CenterSystem, variant: int) -> AdmissibilityResult:
    for seed in range(8):
        rep = representative(w, sys, variant=variant, seed=seed)
        try:
            self_intersections(rep)
        except NonGenericError:
            continue
        break
    else:
        raise RuntimeError("could not build a generic representative")
    if not homotopy_word(rep, sys).same_class(w):
        raise RuntimeError("representative does not realize the word")
    taut = make_taut(rep, sys)
    inner = tuple(innermost_subloops(taut, sys))
    witness = next((s for s in inner if len(s.enclosed_centers) < 2), None)
    return AdmissibilityResult(witness is None, w, witness, taut, inner)
