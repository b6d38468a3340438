"""Equilibrium, stability and bifurcation analysis of a ratio-dependent
predator-prey model with a quadratic predator mortality term."""

from .model import DimensionalParams, Params, State

__version__ = "0.1.0"

__all__ = ["DimensionalParams", "Params", "State", "__version__"]
