"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter lies outside its physical or documented domain."""


class NumericFailureError(ArithmeticError):
    """A numerical routine failed (singular matrix, eigen-solver, ...)."""


class SolverError(RuntimeError):
    """Root finding did not converge."""
