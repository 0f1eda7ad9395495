"""Topology of loops in the plane punctured at the centers."""
from .admissible import AdmissibilityResult, TrivialClassError, is_admissible, representative
from .crossings import (
    Crossing,
    IntersectionReport,
    NonGenericError,
    SubLoop,
    innermost_subloops,
    self_intersections,
    signed_area,
    subloops,
)
from .invariants import DegenerateRayError, homotopy_word, ray_chamber, winding_vector
from .taut import NoSurgeryError, TautResult, find_bigons, find_monogons, make_taut, remove_bigon, remove_monogon
from .words import HomotopyWord, WordSyntaxError, parse_word, reduce_word

__all__ = [
    "AdmissibilityResult",
    "Crossing",
    "DegenerateRayError",
    "HomotopyWord",
    "IntersectionReport",
    "NoSurgeryError",
    "NonGenericError",
    "SubLoop",
    "TautResult",
    "TrivialClassError",
    "WordSyntaxError",
    "find_bigons",
    "find_monogons",
    "homotopy_word",
    "innermost_subloops",
    "is_admissible",
    "make_taut",
    "parse_word",
    "ray_chamber",
    "reduce_word",
    "remove_bigon",
    "remove_monogon",
    "representative",
    "self_intersections",
    "signed_area",
    "subloops",
    "winding_vector",
]
