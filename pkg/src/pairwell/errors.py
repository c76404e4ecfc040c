"""Exception types shared across the package."""


class PairwellError(Exception):
    """Base class for all package errors."""


class ConfigError(PairwellError):
    """Invalid or inconsistent run configuration."""


class InvariantError(PairwellError):
    """A physical or numerical invariant check failed."""


class ConvergenceError(PairwellError):
    """A numerical procedure failed to converge (time step, bisection, fit)."""
