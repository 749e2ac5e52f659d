"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class NearSingularError(ArithmeticError):
    """The spectral parameter sits on (or too close to) an edge Dirichlet eigenvalue."""

    def __init__(self, message, edge=None, value=None):
        super().__init__(message)
        self.edge = edge
        self.value = value


class CommensurabilityError(InvalidInputError):
    """Magnetic flux is not compatible with the requested torus period."""


class UnsupportedParameterError(InvalidInputError):
    """The requested shortcut only exists for special parameter values."""
