"""Exception hierarchy shared by all modules."""


class OSGRFError(Exception):
    """Base class for errors raised by the package."""


class DomainError(OSGRFError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidAnisotropyError(DomainError):
    """Matrix is not a valid anisotropy (spectrum not in the right half-plane)."""


class InvalidSpecError(DomainError):
    """A field specification violates its invariants."""


class ConfigurationError(OSGRFError, ValueError):
    """Grid, lattice or filter settings are mutually incompatible."""


class InsufficientDataError(OSGRFError, ValueError):
    """Too few scales or samples to fit a statistic."""


class NumericError(OSGRFError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""
