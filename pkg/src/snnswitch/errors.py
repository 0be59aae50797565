"""Exception hierarchy shared by the compiler, simulators and CLI."""


class SnnSwitchError(Exception):
    """Base class for all package errors."""


class ConfigError(SnnSwitchError, ValueError):
    """Invalid user-supplied description or configuration."""


class MappingError(SnnSwitchError):
    """A layer cannot be placed within the per-PE memory budget."""


class SimulationError(SnnSwitchError):
    """Runtime fault inside one of the execution simulators."""


class EquivalenceError(SnnSwitchError):
    """Two simulators disagreed on a spike raster."""

    def __init__(self, message, first_divergence=None):
        super().__init__(message)
        self.first_divergence = first_divergence


class ModelFormatError(SnnSwitchError, ValueError):
    """A serialized classifier could not be decoded."""


class BundleError(SnnSwitchError, ValueError):
    """A compiled image bundle is missing, malformed or corrupted."""
