"""Exception types raised across the package."""


class PhyLinkError(Exception):
    """Base class for all package errors."""


class EmptyPilotSet(PhyLinkError, ValueError):
    pass


class IndexOutOfRange(PhyLinkError, IndexError):
    pass


class NegativeNoise(PhyLinkError, ValueError):
    pass


class ParameterOutOfRange(PhyLinkError, ValueError):
    pass


class DimensionError(PhyLinkError, ValueError):
    pass


class NonHermitianCovariance(PhyLinkError, ValueError):
    pass


class FormatError(PhyLinkError, ValueError):
    """Malformed covariance, scenario or config file."""


class GridTooLarge(PhyLinkError, ValueError):
    pass


class DegenerateReference(PhyLinkError, ValueError):
    """The perfect-CSI reference BLER is zero at some SNR point."""


class ConfigError(PhyLinkError, ValueError):
    pass


class EvaluationFailure(PhyLinkError, RuntimeError):
    """An estimator or controller crashed during evaluation."""
