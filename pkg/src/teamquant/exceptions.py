"""Exception types raised across the package."""


class TeamQuantError(Exception):
    """Base class for all errors raised by teamquant."""


class InvalidParameter(TeamQuantError, ValueError):
    pass


class NonFiniteValue(TeamQuantError, ArithmeticError):
    """An integrand returned NaN or infinity at a quadrature node."""


class NonFiniteCost(TeamQuantError, ArithmeticError):
    """A team cost evaluated to NaN or infinity."""


class DensityOverflow(TeamQuantError, OverflowError):
    """The exponent of a Gaussian density ratio exceeds the float64 range."""


class UnsupportedKernel(TeamQuantError, ValueError):
    """An observation kernel has no unit-variance Gaussian description."""


class UnsupportedVariance(TeamQuantError, ValueError):
    pass


class TooLarge(TeamQuantError, ValueError):
    """An enumeration or exact recursion would exceed its configured cap."""


class ConfigError(TeamQuantError, ValueError):
    pass


class StepFailed(TeamQuantError, RuntimeError):
    """A refinement-schedule step raised; carries the step index."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"schedule step {step} failed: {type(cause).__name__}: {cause}")
