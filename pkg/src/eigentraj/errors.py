"""Exception hierarchy. Each class carries the CLI exit status it maps to."""


class EigenTrajError(Exception):
    exit_code = 1


class ConfigError(EigenTrajError, ValueError):
    """Bad argument, bad configuration, or a missing upstream artifact."""

    exit_code = 2


class ShapeError(ConfigError):
    """Array shapes disagree with what an operation expects."""


class DataError(EigenTrajError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(EigenTrajError, ArithmeticError):
    exit_code = 4
