"""Boson, fermion and classical transition statistics in linear interferometers.

Probabilities for partially distinguishable particles, thermal generating
functions, the complementarity identities tying bosons to fermions,
particle-number covariances and Haar averages.
"""

__version__ = "0.1.0"

from .algebra import (
    GramMatrix,
    InternalStateBank,
    UnitaryMatrix,
    determinant,
    equal_overlap_gram,
    gram_from_states,
    haar_unitary,
    permanent,
    random_gram,
    states_from_gram,
)
from .errors import (
    BfcompError,
    DimensionError,
    DivergenceError,
    PauliViolationError,
    ResourceLimitError,
    ValidationError,
)
from .interference import Species, full_distribution, transition_probability

__all__ = [
    "__version__",
    "GramMatrix",
    "InternalStateBank",
    "UnitaryMatrix",
    "determinant",
    "equal_overlap_gram",
    "gram_from_states",
    "haar_unitary",
    "permanent",
    "random_gram",
    "states_from_gram",
    "BfcompError",
    "DimensionError",
    "DivergenceError",
    "PauliViolationError",
    "ResourceLimitError",
    "ValidationError",
    "Species",
    "full_distribution",
    "transition_probability",
]
