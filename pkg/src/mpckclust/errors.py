"""Exception types shared across the package."""


class KClustError(Exception):
    """Base class for all package errors."""


class ParameterError(KClustError, ValueError):
    """A parameter is outside its allowed range or inconsistent with the inputs."""


class DegenerateDatasetError(KClustError, ValueError):
    """The dataset cannot be normalized (all points coincide, or duplicates)."""


class InfeasibleError(KClustError, ValueError):
    """A fractional solution carries less than one unit of total mass."""


class PreconditionError(ParameterError):
    """An input violates a documented precondition (e.g. not normalized)."""


class GuardError(KClustError, RuntimeError):
    """A brute-force oracle was asked for an instance beyond its size guard."""


class CapacityError(KClustError, RuntimeError):
    """A simulated machine would exceed its local memory."""


class ConfigurationError(KClustError, ValueError):
    """An MPC configuration is unusable (e.g. memory below the polylog floor)."""
