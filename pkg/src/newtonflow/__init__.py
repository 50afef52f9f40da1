"""Power flow as a continuous Newton flow, with QSS-based step control."""

from .casefile import NetworkCase, bundled_case, load_case, parse_case
from .network import PowerFlowModel, StateVector, assemble_state
from .solvers import Method, SolverConfig, Verdict, solve

__all__ = [
    "NetworkCase",
    "bundled_case",
    "load_case",
    "parse_case",
    "PowerFlowModel",
    "StateVector",
    "assemble_state",
    "Method",
    "SolverConfig",
    "Verdict",
    "solve",
]

__version__ = "0.1.0"
