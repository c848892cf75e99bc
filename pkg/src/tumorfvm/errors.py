"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class SolverError(RuntimeError):
    """Base class for failures raised while advancing a simulation."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class StencilError(ValidationError):
    """The mesh or array is too short for a reconstruction stencil."""


class DomainCollapseError(SolverError):
    """A radius update would produce a non-positive domain radius."""


class NonFiniteError(SolverError):
    """A state value became NaN or infinite."""


class ConvergenceError(SolverError):
    """An implicit iteration did not reach its tolerance.

    The last observed change is kept in ``residual``.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ConfigError(ValueError):
    """A run configuration is malformed; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
