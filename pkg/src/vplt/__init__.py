"""Streaming recognition and property testing for visibly pushdown languages."""
from .automata import (
    NEUTRAL,
    POP,
    PUSH,
    PushdownAlphabet,
    Relation,
    SlicingNfa,
    Vpa,
    VpaSyntaxError,
    accepts,
    build_slicing,
    compose,
    parse_vpa,
    reach_and_diameter,
    relation_of_balanced,
)

__version__ = "0.1.0"

__all__ = [
    "NEUTRAL",
    "POP",
    "PUSH",
    "PushdownAlphabet",
    "Relation",
    "SlicingNfa",
    "Vpa",
    "VpaSyntaxError",
    "accepts",
    "build_slicing",
    "compose",
    "parse_vpa",
    "reach_and_diameter",
    "relation_of_balanced",
]
