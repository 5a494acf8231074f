"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a distribution function."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class DataError(ValueError):
    """Input data violates the bivariate survival schema."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class NonFiniteLikelihood(ArithmeticError):
    """An observation produced a non-finite log-likelihood contribution."""

    def __init__(self, index, value):
        super().__init__(f"non-finite log-likelihood contribution {value!r} at observation {index}")
        self.index = index
        self.value = value


class McmcError(RuntimeError):
    """Sampler initialisation or post-run diagnostic failure."""
