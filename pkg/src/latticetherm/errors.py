"""Exception hierarchy shared by all modules."""


class LatticeThermError(Exception):
    """Base class for every error raised by latticetherm."""


class SupportNotContained(LatticeThermError):
    pass


class VolumeMismatch(LatticeThermError):
    pass


class VolumeTooLarge(LatticeThermError):
    pass


class MarginTooSmall(LatticeThermError):
    pass


class NonPositiveSpectrum(LatticeThermError):
    pass


class NotHermitian(LatticeThermError):
    pass


class InvalidState(LatticeThermError):
    """Raised when a matrix fails the density-matrix invariants."""


class StateNotFaithful(LatticeThermError):
    pass


class TooFewPoints(LatticeThermError):
    pass


class OverflowRisk(LatticeThermError):
    pass


class TruncationNotConverged(LatticeThermError):
    pass


class DimensionNotSupported(LatticeThermError):
    pass


class ConfigInvalid(LatticeThermError):
    pass


class ManifestMissing(LatticeThermError):
    pass
