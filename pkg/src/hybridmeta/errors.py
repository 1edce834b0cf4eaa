"""Exception types shared across modules."""


class NonConvergence(ArithmeticError):
    """A series or transformation failed to reach its tolerance."""


class QuadratureFailure(ArithmeticError):
    """An integral did not reach its target accuracy."""

    def __init__(self, message: str, error_estimate: float | None = None):
        super().__init__(message)
        self.error_estimate = error_estimate


class DomainError(ValueError):
    """An argument lies outside the support of a density."""


class PreconditionError(ValueError):
    """A closed form was requested outside the exponents it assumes."""


class IntegrationFailure(ArithmeticError):
    """The Gil-Pelaez integral did not settle."""

    def __init__(self, message: str, error_estimate: float | None = None):
        super().__init__(message)
        self.error_estimate = error_estimate
