"""Irreducibility checks and eigenvector uniqueness for m-topical maps built from power means."""

from .boolfn import BoolMap
from .checks import CheckReport, Condition, Digraph, adjacency_graph, check
from .expr import evaluate, parse_map, render_map, validate
from .signature import local_signatures, lower_signature, upper_signature
from .spectral import condition_M, condition_N, hilbert_distance, power_iteration

__all__ = [
    "BoolMap", "CheckReport", "Condition", "Digraph", "adjacency_graph", "check",
    "evaluate", "parse_map", "render_map", "validate",
    "local_signatures", "lower_signature", "upper_signature",
    "condition_M", "condition_N", "hilbert_distance", "power_iteration",
]
