"""Exception hierarchy shared by every module."""


class TandemError(Exception):
    """Base class for all library errors."""


class ContractError(TandemError, ValueError):
    """An argument violates an operation's preconditions (usually a shape)."""


class ConfigError(TandemError, ValueError):
    """A configuration value is missing, unknown or out of range."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericError(TandemError, ArithmeticError):
    """Non-finite values appeared during training."""


class TrainingFailure(TandemError):
    """Mirror training ran out of epochs before reaching the success fraction.

    The final report is attached so callers can decide to keep the network.
    """

    def __init__(self, message, report, mnn=None):
        super().__init__(message)
        self.report = report
        self.mnn = mnn


class SeedSelectionError(TandemError):
    """No admissible set of initial seed points was found."""


class UnsupportedSizeError(TandemError, ValueError):
    """Exhaustive permutation search was asked for too many labels."""


class DataError(TandemError, ValueError):
    """Malformed, mismatched or unusable sample data."""


class EvaluationError(TandemError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SchemaError(DataError):
    pass


class GenerationError(DataError):
    pass


class StratificationError(DataError):
    pass
