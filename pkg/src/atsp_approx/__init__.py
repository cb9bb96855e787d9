"""Constant-factor approximation for asymmetric TSP, computed in exact rational arithmetic."""

from .errors import InvariantViolation, SolveError
from .formats import ParseError, parse_instance
from .generators import generate
from .graph import Digraph, Edge, EdgeMultiset, Subtour
from .instance import Instance, LaminarForest
from .pipeline import SolveReport, SolverConfig, approx_atsp, brute_force_atsp, verify_tour

__all__ = [
    "Digraph",
    "Edge",
    "EdgeMultiset",
    "Instance",
    "InvariantViolation",
    "LaminarForest",
    "ParseError",
    "SolveError",
    "SolveReport",
    "SolverConfig",
    "Subtour",
    "approx_atsp",
    "brute_force_atsp",
    "generate",
    "parse_instance",
    "verify_tour",
]
