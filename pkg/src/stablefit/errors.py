"""Exception hierarchy and warning categories shared across the package."""


class StableFitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParamsError(StableFitError):
    """Parameter tuple violates the stable-law domain."""


class BracketError(StableFitError):
    """A root or maximum bracket is degenerate or does not enclose a target."""


class ConvergenceError(StableFitError):
    """An iterative routine exhausted its iteration budget."""


class DegenerateFrequencyError(StableFitError):
    """Characteristic-function magnitude unusable at the requested frequency."""


class ScaleSearchError(StableFitError):
    """The constant-modulus scale search could not bracket a solution."""


class PointSelectionError(StableFitError):
    """Sensitivity-based frequency selection found no usable root."""


class EstimationError(StableFitError):
    """An estimator failed to produce finite parameter estimates.

    Carries the partial iteration trace when one is available.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = tuple(trace)


class InsufficientSampleError(StableFitError):
    """Sample too small for the requested operation."""


class QuantileError(StableFitError):
    """Distribution quantile could not be bracketed or refined."""


class StudyError(StableFitError):
    """Benchmark study configuration or execution failure."""


class AccuracyWarning(UserWarning):
    """Numerical result may be less accurate than the requested tolerance."""
