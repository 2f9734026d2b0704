"""Exception and warning types raised across the package."""


class QmeError(ValueError):
    """Base class for all domain errors."""


class UnsupportedDimension(QmeError):
    pass


class BadSubsystem(QmeError):
    pass


class DimMismatch(QmeError):
    pass


class NotUnitary(QmeError):
    pass


class InvalidState(QmeError):
    pass


class NotThermal(QmeError):
    pass


class InvalidStrength(QmeError):
    pass


class OutsideEngineRegime(QmeError):
    pass


class DegenerateCycle(QmeError):
    pass


class NotTracePreserving(QmeError):
    pass


class InvalidNoise(QmeError):
    pass


class UnstableEstimate(QmeError):
    pass


class NothingToPlot(QmeError):
    pass


class ConfigError(QmeError):
    pass


class ZeroTemperature(UserWarning):
    """Issued when a pure ground state is assigned the k_BT -> 0+ limit."""
