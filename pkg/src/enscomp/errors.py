"""Exception hierarchy shared by every enscomp module."""


class EnscompError(Exception):
    """Base class for all errors raised by this package."""

    #: short machine-parsable code, printed by the CLI on failure
    code = "EnscompError"


class FormatError(EnscompError):
    """A file does not match its declared on-disk format."""

    code = "FormatError"


class DataError(EnscompError):
    """File parsed, but the values inside violate an invariant (NaN, Inf, ...)."""

    code = "DataError"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ShapeError(EnscompError):
    """Two objects that must agree in shape do not."""

    code = "ShapeError"


class ConfigError(EnscompError):
    """Invalid configuration: bad option value, duplicate id, out-of-range k."""

    code = "ConfigError"


class DomainError(EnscompError):
    """Numeric inputs outside the mathematical domain of an operation."""

    code = "DomainError"


class DegenerateError(EnscompError):
    """A statistic is undefined because its inputs are collinear."""

    code = "DegenerateError"


class InsufficientSamplesError(EnscompError):
    """Too few samples remain for the requested statistic."""

    code = "InsufficientSamplesError"
