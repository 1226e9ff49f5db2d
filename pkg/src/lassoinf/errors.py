"""Exception hierarchy: DataError subclasses map to CLI exit code 2, NumericalError to 3."""


class LassoinfError(Exception):
    """Base class for all package errors."""


class DataError(LassoinfError):
    """Invalid or unusable input data."""


class DegenerateDesignError(DataError):
    """Design matrix (or a required sub-matrix) is rank deficient, or a
    residualized column has negligible norm."""


class ZeroResidualError(DataError):
    """Residual norm of the tested response is zero; the unknown-variance
    decomposition is undefined."""


class PartitionError(DataError):
    """A cross-validation partition leaves a fold empty or a training set
    with no rows."""


class DegenerateGridError(DataError):
    """No positive penalty grid exists (response orthogonal to every column)."""


class NotSelectedError(DataError):
    """A selection-conditional quantity was requested but the coefficient
    was not selected (its LASSO estimate is zero)."""


class NumericalError(LassoinfError):
    """Numerical failure inside an otherwise valid computation."""


class ConvergenceError(NumericalError):
    """Iterative solver failed to converge within its iteration cap."""


class PathError(NumericalError):
    """Piecewise-linear path tracing stalled or cycled."""


class ConsistencyError(NumericalError):
    """A solver output contradicts the analytic characterization beyond
    tolerance (usually indicates non-convergence)."""


class NoSolutionError(NumericalError):
    """Root bracketing for the state-evolution equations failed."""
