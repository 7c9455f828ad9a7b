"""Exception types shared across the package."""


class RfsnError(Exception):
    """Base class for all rfsn errors."""


class ConfigurationError(RfsnError):
    """Invalid parameters, config files, or infeasible hardware settings."""


class CalibrationError(RfsnError):
    """A calibration search could not be completed."""
