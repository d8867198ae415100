"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures exit 3, violated acceptance properties exit 4.
"""


class ResonancesError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ResonancesError):
    """Invalid configuration value, file, or CLI argument."""


class ParameterError(ResonancesError, ValueError):
    """Physical or numerical parameter outside its admissible domain."""


class NearDegenerateError(ParameterError):
    """Parameters so close to an extremal case that roots or horizons merge."""


class SingularityError(ResonancesError, ArithmeticError):
    """Evaluation of a quantity at a point where it has no finite value."""


class GeometryMismatchError(ResonancesError, ValueError):
    """Grid or domain does not match the geometry it is used with."""


class LinearizationError(ResonancesError, ArithmeticError):
    """Companion linearization impossible (leading coefficient singular)."""


class ConvergenceError(ResonancesError, ArithmeticError):
    """An iteration failed to converge within its budget."""


class MisuseError(ResonancesError, ValueError):
    """An operation was called with arguments that defeat its purpose."""


class InsufficientDataError(ResonancesError, ValueError):
    """Not enough data points to perform a fit or a statistic."""


class WindowError(ResonancesError, ValueError):
    """Requested region is not contained in the trusted window."""


class SymmetryViolationError(ResonancesError):
    """Accepted spectrum violates the conjugate-pair symmetry property."""
