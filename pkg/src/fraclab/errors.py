"""Exception hierarchy shared by all fraclab modules."""


class FraclabError(Exception):
    """Base class for all package errors."""


class DomainError(FraclabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CoercivityError(FraclabError):
    """The requested problem violates the coercivity guard and is refused."""


class ConvergenceError(FraclabError):
    """An iterative solve failed to reach its tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class IntegrityError(FraclabError):
    """A computed object violates an internal invariant (degenerate input)."""


class MeshResolutionError(FraclabError):
    """The mesh is too coarse for the requested computation."""
