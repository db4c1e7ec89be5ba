"""Exception hierarchy shared by every module."""


class BfcompError(Exception):
    """Base class for library errors."""


class DimensionError(BfcompError, ValueError):
    """Operands have incompatible shapes."""


class ResourceLimitError(BfcompError):
    """Requested size exceeds what the exact algorithms are allowed to attempt."""


class ValidationError(BfcompError, ValueError):
    """A matrix or vector violates a structural invariant (unitarity, PSD, ...)."""


class ParticleNumberMismatch(BfcompError, ValueError):
    """Input and output occupations carry different particle numbers."""


class PauliViolationError(BfcompError, ValueError):
    """A fermionic input places two or more particles in one mode."""


class DivergenceError(BfcompError, ArithmeticError):
    """A bosonic generating function is evaluated outside its domain of convergence."""
