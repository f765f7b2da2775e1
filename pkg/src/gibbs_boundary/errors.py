"""Exception hierarchy shared by all modules."""


class GibbsBoundaryError(Exception):
    """Base class for every error raised by this package."""


class InvalidCurveError(GibbsBoundaryError, ValueError):
    pass


class DegenerateClosureError(GibbsBoundaryError, ValueError):
    pass


class InfeasibleClosureError(GibbsBoundaryError, ValueError):
    """The closure constraint forces the first coefficient to be non-positive."""


class EmptyDataError(GibbsBoundaryError, ValueError):
    pass


class DegenerateDataError(GibbsBoundaryError, ValueError):
    pass


class ThresholdOutsideDataError(GibbsBoundaryError, ValueError):
    pass


class DegenerateRegionError(GibbsBoundaryError, ValueError):
    pass


class NoGapError(GibbsBoundaryError, ValueError):
    """Estimated CDFs are not stochastically ordered at the threshold."""


class SolverFailureError(GibbsBoundaryError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ScalingFailureError(GibbsBoundaryError, RuntimeError):
    pass


class UnknownScenarioError(GibbsBoundaryError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class EmptyChainError(GibbsBoundaryError, ValueError):
    pass


class ConfigError(GibbsBoundaryError, ValueError):
    pass


class DatasetValidationError(GibbsBoundaryError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
