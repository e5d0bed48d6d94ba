"""Exception hierarchy shared by all modules."""


class SpectraError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SpectraError, ValueError):
    """A depth outside the layer on which a profile is defined."""


class AmbiguityError(SpectraError):
    """A critical layer was requested on a non-monotone profile."""


class InputError(SpectraError, ValueError):
    """Non-finite or otherwise unusable numerical input."""


class SingularIntegrationError(SpectraError):
    """The Rayleigh integrator failed near a critical layer."""

    def __init__(self, message, xc=None):
        super().__init__(message)
        self.xc = xc


class CriticalLayerConvergenceError(SpectraError):
    """Richardson extrapolation over the imaginary offsets did not settle."""


class YPoleError(SpectraError):
    """The interface value y(0) vanishes, so Y = y'(0)/y(0) has a pole."""

    def __init__(self, message, y0=None):
        super().__init__(message)
        self.y0 = y0


class EndpointUndefinedError(SpectraError):
    """Y is undefined at c = U(0) because the Rayleigh equation is singular there."""


class QuadratureError(SpectraError):
    """An integral failed to converge."""


class ContractionError(SpectraError):
    """The large-k fixed point map did not contract."""


class NewtonError(SpectraError):
    """Newton iteration diverged or hit a vanishing derivative."""

    def __init__(self, message, c=None):
        super().__init__(message)
        self.c = c


class ContourError(SpectraError):
    """The winding integral did not settle on an integer (a root sits on the contour)."""


class ConfigError(SpectraError):
    """Malformed run configuration."""
