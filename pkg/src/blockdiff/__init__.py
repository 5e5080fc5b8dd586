"""Effective diffusivity tensors of two-dimensional periodic block media."""
from .grid import BlockGrid, GridError, from_array, load, new_uniform, refine, save, validate
from .quadrature import QuadratureRule, midpoint_rule
from .sa_solver import (EffectiveTensor, ParameterError, SolverError, SolverParams,
                        compute, default_neig)
from .fvm_solver import MeshError, compute_fvm
from .geometry import (AggregationConfig, aggregate_random, case_layout, checkerboard,
                       convergence_case, pixelate)
from .analysis import (benchmark, convergence_study, principal_directions,
                       relative_error)

__version__ = "0.1.0"

__all__ = [
    "BlockGrid", "GridError", "from_array", "load", "new_uniform", "refine", "save",
    "validate", "QuadratureRule", "midpoint_rule", "EffectiveTensor", "ParameterError",
    "SolverError", "SolverParams", "compute", "default_neig", "MeshError", "compute_fvm",
    "AggregationConfig", "aggregate_random", "case_layout", "checkerboard",
    "convergence_case", "pixelate", "benchmark", "convergence_study",
    "principal_directions", "relative_error",
]
