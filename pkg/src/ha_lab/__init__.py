"""Numerical harmonic analysis on piecewise-constant grid functions.

Hardy-Cesaro and Hardy-Bellman operators, truncated Fourier transforms,
rearrangement, Lorentz and net-space norms, a harness for weighted Fourier
inequalities, simple atoms and explicit counterexamples.
"""
from .grid import (
    Axis,
    GridError,
    GridFunction,
    IntegrabilityError,
    indicator,
    lp_norm,
    make_grid_function,
    read_grid_csv,
    write_grid_csv,
)
from .hardy import EpsilonMask, commute_check, hardy_eps, hardy_eval, t_epsilon
from .fourier import fourier_at, frequency_grid, truncated_fourier

__all__ = [
    "Axis",
    "EpsilonMask",
    "GridError",
    "GridFunction",
    "IntegrabilityError",
    "commute_check",
    "fourier_at",
    "frequency_grid",
    "hardy_eps",
    "hardy_eval",
    "indicator",
    "lp_norm",
    "make_grid_function",
    "read_grid_csv",
    "t_epsilon",
    "truncated_fourier",
    "write_grid_csv",
]
__version__ = "0.1.0"
