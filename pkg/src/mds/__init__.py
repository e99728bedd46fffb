"""Moebius structures on the circle and their timed causal spaces."""
from .circle import CirclePoint, CrossRatioTriple, Permutation4, TupleN, normalize
from .errors import MdsError
from .harmonic import Event, common_perpendicular, harmonic_conjugate, time_between
from .moebius import (
    Canonical,
    MoebiusStructure,
    Perturbed,
    Rescaled,
    Snowflake,
    Tabulated,
    check_monotonicity,
    cross_ratio_triple,
    ellipse,
    make_structure,
)
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "Canonical", "CirclePoint", "CrossRatioTriple", "DEFAULT", "Event", "MdsError",
    "MoebiusStructure", "Permutation4", "Perturbed", "Rescaled", "Snowflake", "Tabulated",
    "Tolerances", "TupleN", "check_monotonicity", "common_perpendicular", "cross_ratio_triple",
    "ellipse", "harmonic_conjugate", "make_structure", "normalize", "time_between",
]
