"""Cyclic words in the free group on the centers.

A free homotopy class of loops in the plane minus ``N`` points is a
conjugacy class of the free group on ``N`` generators, represented here by a
cyclically reduced word.  Letters are pairs ``(j, s)`` with generator index
``j`` counted from 1 and sign ``s = +1`` (counter-clockwise around center
``j``) or ``-1``.  The text form is whitespace-separated tokens ``a3``
(generator 3) and ``A3`` (its inverse).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

__all__ = ["HomotopyWord", "WordSyntaxError", "parse_word", "reduce_word"]

_TOKEN = re.compile(r"^([aA])([1-9][0-9]*)$")


class WordSyntaxError(ValueError):
    """Raised for malformed word text."""


@dataclass(frozen=True)
class HomotopyWord:
    """Cyclically reduced word; ``letters`` is a tuple of ``(j, +-1)``."""

    letters: tuple = ()

    def __post_init__(self):
        letters = tuple((int(j), int(s)) for j, s in self.letters)
        for j, s in letters:
            if j < 1 or s not in (1, -1):
                raise ValueError(f"invalid letter {(j, s)!r}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def parse(cls, text: str) -> "HomotopyWord":
        return reduce_word(parse_word(text))

    def __str__(self) -> str:
        return " ".join(("a" if s > 0 else "A") + str(j) for j, s in self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def is_trivial(self) -> bool:
        return not self.letters

    @property
    def max_generator(self) -> int:
        return max((j for j, _ in self.letters), default=0)

    def abelianization(self, n_centers: int) -> np.ndarray:
        """Signed letter count per generator (the winding vector of the class)."""
        out = np.zeros(n_centers, dtype=int)
        for j, s in self.letters:
            if j > n_centers:
                raise ValueError(f"generator {j} exceeds the number of centers {n_centers}")
            out[j - 1] += s
        return out

    def inverse(self) -> "HomotopyWord":
        return HomotopyWord(tuple((j, -s) for j, s in reversed(self.letters)))

    def canonical(self) -> "HomotopyWord":
        """Lexicographically least cyclic rotation, a normal form for the class."""
        if not self.letters:
            return self
        n = len(self.letters)
        rots = [self.letters[k:] + self.letters[:k] for k in range(n)]
        return HomotopyWord(min(rots))

    def same_class(self, other: "HomotopyWord") -> bool:
        """True if both words are cyclic rotations of one another."""
        return self.canonical().letters == other.canonical().letters


def parse_word(text: str) -> list:
    """Letters of a word written as tokens ``a<j>`` / ``A<j>``; no reduction."""
    letters = []
    for tok in text.split():
        m = _TOKEN.match(tok)
        if m is None:
            raise WordSyntaxError(f"invalid word token {tok!r}; expected a<j> or A<j> with j >= 1")
        letters.append((int(m.group(2)), 1 if m.group(1) == "a" else -1))
    return letters


def reduce_word(letters: Union[str, Iterable]) -> HomotopyWord:
    """Free reduction followed by cyclic reduction."""
    if isinstance(letters, str):
        letters = parse_word(letters)
    elif isinstance(letters, HomotopyWord):
        letters = letters.letters
    stack: list = []
    for j, s in letters:
        if stack and stack[-1] == (j, -s):
            stack.pop()
        else:
            stack.append((j, s))
    lo, hi = 0, len(stack)
    while hi - lo >= 2 and stack[lo][0] == stack[hi - 1][0] and stack[lo][1] == -stack[hi - 1][1]:
        lo += 1
        hi -= 1
    return HomotopyWord(tuple(stack[lo:hi]))
