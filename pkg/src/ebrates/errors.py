"""Exception hierarchy shared across the package."""


class EbratesError(Exception):
    """Base class for all package errors."""


class DomainError(EbratesError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateError(EbratesError, ValueError):
    """The data cannot support the requested estimate (zero spread, moments
    incompatible with a beta law, and the like)."""


class ConvergenceError(EbratesError, RuntimeError):
    """An iterative numerical routine failed to converge."""


class InputError(EbratesError):
    """Malformed or inconsistent input files."""


class SimulationError(EbratesError):
    """Too many Monte Carlo replications failed."""
