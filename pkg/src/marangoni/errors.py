"""Typed exceptions shared across the toolkit."""


class MarangoniError(Exception):
    """Base class for all toolkit errors."""


class DomainError(MarangoniError, ValueError):
    """Parameter outside the mathematical domain of an operation."""


class UsageError(MarangoniError, ValueError):
    """Operation called with incompatible or malformed arguments."""


class RegimeError(MarangoniError):
    """Operation requires a different instability regime."""


class DegenerateEigenvalueError(MarangoniError):
    """Eigenvalue collision where a simple eigenvalue is required."""


class ExtractionError(MarangoniError):
    """Taylor-form or coefficient extraction failed a consistency check."""


class BranchNotFoundError(MarangoniError):
    """Requested solution branch does not exist in this parameter regime."""


class ConnectionNotFoundError(MarangoniError):
    """No heteroclinic connection found between the requested fixed points."""


class SimulationAbort(MarangoniError):
    """Time integration aborted (film-height degeneracy or blow-up)."""
