"""Periodic and collision motions of a test particle among fixed attracting centers.

Submodules
----------
model       centers, sampled loops and arcs, potential, action, energy
topology    homotopy words, winding, self-intersections, taut loops, admissibility
minimize    class-preserving action minimization and outcome classification
kepler      the one-center problem: parabolic motions, blow-ups, obstacles, sweeps
regularize  Levi-Civita coordinates, reflection test, collision asymptotics
cli         command-line front end (``ncenter``)
"""
from importlib.metadata import PackageNotFoundError, version

from .model import CenterSystem, OpenArc, PeriodicLoop, action, energy, eom_residual, potential

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "CenterSystem",
    "OpenArc",
    "PeriodicLoop",
    "action",
    "energy",
    "eom_residual",
    "potential",
    "__version__",
]
