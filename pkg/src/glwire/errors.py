"""Exception types raised across the package."""


class GlwireError(Exception):
    """Base class for all package errors."""


class DomainError(GlwireError, ValueError):
    pass


class GeometryError(DomainError):
    pass


class MeshAspectError(DomainError):
    pass


class CurrentError(GlwireError, ValueError):
    pass


class CompatibilityError(GlwireError, ValueError):
    """Neumann data with nonzero total flux."""


class LinearSolveError(GlwireError, RuntimeError):
    pass


class EigSolveError(GlwireError, RuntimeError):
    pass


class BlowupError(GlwireError, RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(GlwireError, ValueError):
    pass


class EmptyRegion(GlwireError, ValueError):
    pass


class DegenerateFit(GlwireError, ValueError):
    pass


class InsufficientHorizon(GlwireError, RuntimeError):
    pass


class ZeroOrderParameter(GlwireError, ValueError):
    pass


class CheckFailed(GlwireError, AssertionError):
    """A verification check that the caller asked to enforce did not pass."""
