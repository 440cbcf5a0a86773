"""Exception types shared across the package."""


class RapidppError(Exception):
    """Base class for all package-specific errors."""


class GeneratorValidationError(RapidppError):
    """A proposed transition-rate matrix is not a usable generator."""


class NonSquareError(GeneratorValidationError):
    pass


class NegativeOffDiagonalError(GeneratorValidationError):
    pass


class RowSumError(GeneratorValidationError):
    """Some row of the rate matrix does not sum to zero."""


class ReducibleError(GeneratorValidationError):
    """The chain is not irreducible (its positive-rate graph is not strongly connected)."""


class SingularSystemError(RapidppError):
    """A linear system that should be solvable turned out numerically degenerate."""


class ZeroMeanRateError(RapidppError):
    """The long-run average arrival rate is zero, so no analysis is possible."""


class QuadratureError(RapidppError):
    """Adaptive quadrature could not reach the requested tolerance."""


class DegenerateMeanError(RapidppError):
    """A baseline mean that must be positive is zero."""


class EnumerationTooLargeError(RapidppError):
    """Exact enumeration would exceed the supported problem size."""


class LengthMismatchError(RapidppError):
    """Paired sequences (arrivals and service draws) differ in length."""


class ConfigError(RapidppError):
    """A configuration document is malformed or inconsistent.

    ``path`` locates the offending field, e.g. ``"model.generator[1][0]"``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
