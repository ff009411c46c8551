"""Quasi-steady-state and center-manifold reductions of Michaelis-Menten kinetics."""
from .kinetics import (DerivedConstants, NondimHTA, NondimTQ, ParameterSet, RateConstants,
                       Totals, ValidationError, carr_parameters, derive_constants)
from .solver import (IntegrationError, OdeProblem, SolverConfig, Trajectory, integrate,
                     sample)

__version__ = "0.1.0"

__all__ = ["DerivedConstants", "IntegrationError", "NondimHTA", "NondimTQ", "OdeProblem",
           "ParameterSet", "RateConstants", "SolverConfig", "Totals", "Trajectory",
           "ValidationError", "carr_parameters", "derive_constants", "integrate", "sample"]
