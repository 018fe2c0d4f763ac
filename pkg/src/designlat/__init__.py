"""Exact decomposition lattices for labelled complexes."""

from .complexes import Extension, LabelledComplex
from .errors import (BudgetExceeded, ConstructionError, DesignlatError,
                     ReductionError)
from .maps import compose, dom, img_set, inj, inverse, sort_key
from .symmetry import Orbit, PermutationGroup, is_adapted
from .vectors import AtomType, EdgeVector, Selection, VectorSystem

__version__ = "0.1.0"

__all__ = [
    "AtomType", "BudgetExceeded", "ConstructionError", "DesignlatError",
    "EdgeVector", "Extension", "LabelledComplex", "Orbit",
    "PermutationGroup", "ReductionError", "Selection", "VectorSystem",
    "compose", "dom", "img_set", "inj", "inverse", "is_adapted", "sort_key",
    "__version__",
]
