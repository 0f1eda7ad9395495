"""Minimize the action in a few classes of the two-center problem.

Usage: python demos/two_center_tour.py [output_dir]

For each word the script reports admissibility, the outcome of a short
multistart and writes the loop to ``<output_dir>/<word>.svg``.
"""
import sys
from pathlib import Path

import numpy as np

from ncenter.fixtures import two_center_system
from ncenter.minimize import MinimizeOptions, multistart
from ncenter.svg import Curve, write_svg
from ncenter.topology import is_admissible

WORDS = ("a1 a2", "a1 a2 a2", "a1 a1 a2 a2", "a1 A2", "a1")


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    sys_ = two_center_system(1.5)
    opts = MinimizeOptions(restarts=3, max_iters=5000)
    for word in WORDS:
        admissible = is_admissible(word, sys_).admissible
        best = multistart(word, sys_, 2 * np.pi, opts, n=256).best
        print(f"{word:12s} admissible={admissible!s:5s} {best.status.value:30s} action={best.action_value:.6f} min distance={best.min_distance:.3e}")
        write_svg(out / f"{word.replace(' ', '_')}.svg", [Curve(best.loop.nodes, closed=True, label=word)], sys_.positions, sys_.masses, title=best.status.value)


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent / "out" / "tour")
