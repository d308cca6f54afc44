"""Double reduction of PDE systems through associated symmetries.

A conserved vector that is associated with a Lie point symmetry survives the
reduction by that symmetry; repeating this down to one independent variable
turns the conservation law into a first integral of the reduced ODE.
"""

from .conservation import (
    ConservedVector,
    Equation,
    PdeSystem,
    association,
    bracket,
    check_divergence,
    conserved_vector,
    is_associated,
    reduce_mod_system,
)
from .coordinates import (
    build_change,
    canonical_coordinates,
    make_change,
    transform_conserved,
    transform_conserved_rowrep,
    transform_generator,
)
from .expr import Expr, VariableContext, parse, pretty, to_str
from .oracle import verify_equal, verify_zero
from .pipeline import SelectionStrategy, reduce_once, run_pipeline, select_associated
from .problem import load, loads
from .symmetry import Generator, combine, generator_from_coefficients, prolong

__version__ = "0.1.0"

__all__ = [
    "ConservedVector",
    "Equation",
    "Expr",
    "Generator",
    "PdeSystem",
    "SelectionStrategy",
    "VariableContext",
    "association",
    "bracket",
    "build_change",
    "canonical_coordinates",
    "check_divergence",
    "combine",
    "conserved_vector",
    "generator_from_coefficients",
    "is_associated",
    "load",
    "loads",
    "make_change",
    "parse",
    "pretty",
    "prolong",
    "reduce_mod_system",
    "reduce_once",
    "run_pipeline",
    "select_associated",
    "to_str",
    "transform_conserved",
    "transform_conserved_rowrep",
    "transform_generator",
    "verify_equal",
    "verify_zero",
]
