"""Exception types shared across the package."""


class HatoptError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(HatoptError, ValueError):
    """Malformed numerical input (non-finite entries, shape mismatch, ...)."""


class SingularSystemError(HatoptError, ValueError):
    """Linear system is not positive definite enough to solve."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NumericError(HatoptError, RuntimeError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class ParseError(HatoptError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class DataError(HatoptError, ValueError):
    """A dataset violates the expectations of the consumer."""


class DomainError(HatoptError, ValueError):
    """A point lies outside the domain of a scaling function."""


class ConstantsError(HatoptError, ValueError):
    """Certified constants violate a structural requirement (e.g. 2*sigma_V > L_V)."""


class ConfigError(HatoptError, ValueError):
    """An experiment or optimizer configuration is invalid."""


class UnsupportedProblemError(HatoptError, ValueError):
    """The problem lacks structure required by an estimator or study."""


class SolverError(HatoptError, RuntimeError):
    """A subproblem or line-search solver failed."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class FormatError(HatoptError, ValueError):
    """A persisted trace does not match the expected schema."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column
