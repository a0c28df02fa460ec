"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures with 3 and resource caps with 4.
"""


class HolocrystalError(Exception):
    """Base class for all package errors."""


class ConfigError(HolocrystalError, ValueError):
    """Invalid or unknown configuration input."""


class NumericalError(HolocrystalError, RuntimeError):
    """A numerical procedure failed to converge or lost accuracy."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ResourceLimitError(HolocrystalError):
    """A requested computation exceeds a configured size cap."""


class BasisTooLargeError(ResourceLimitError):
    def __init__(self, num_sites, num_particles, dimension, cap):
        self.num_sites = num_sites
        self.num_particles = num_particles
        self.dimension = dimension
        self.cap = cap
        super().__init__(
            f"Fock basis for {num_sites} sites and {num_particles} particles has "
            f"{dimension} states, above the cap of {cap}"
        )


class StepSizeError(NumericalError):
    """Time step too coarse for the fastest scale in the problem."""


class NoOscillationError(NumericalError):
    """No spectral peak stands out from the background."""


class HorizonError(HolocrystalError, ValueError):
    """The metric function has no usable outer horizon."""


class NakedSingularityError(HorizonError):
    pass


class ExtremalHorizonError(HorizonError):
    pass
