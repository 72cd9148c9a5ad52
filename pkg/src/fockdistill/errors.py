"""Exception hierarchy shared by all modules."""


class DistillError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(DistillError, ValueError):
    """Objects built at different Fock cutoffs were combined."""


class TruncationError(DistillError):
    """The Fock cutoff is too small for the requested state or operator."""


class AnnihilatedStateError(DistillError):
    """A conditional operation left (numerically) nothing behind."""


class HeraldError(AnnihilatedStateError):
    """The click detectors of the tap model never fire."""


class InvalidStateError(DistillError, ValueError):
    """A matrix or amplitude vector violates the state invariants."""


class ConfigError(DistillError, ValueError):
    """A protocol or run configuration is malformed."""
