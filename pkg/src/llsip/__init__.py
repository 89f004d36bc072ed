"""Layered-least-squares interior-point LP solver and circuit-imbalance toolkit."""
from .config import SolverConfig
from .errors import LLSError
from .ipm import Iterate, SolveResult, lp_solve

__all__ = ["SolverConfig", "LLSError", "Iterate", "SolveResult", "lp_solve"]
__version__ = "0.1.0"
