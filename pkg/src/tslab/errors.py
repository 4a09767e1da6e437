"""Exception hierarchy. CLI exit codes hang off these classes."""


class TSLabError(Exception):
    exit_code = 1


class ConfigError(TSLabError, ValueError):
    """Invalid configuration or argument (dimension mismatch, bad ids, ...)."""
    exit_code = 1


class DataError(TSLabError, ValueError):
    """Non-finite or otherwise unusable observed data."""
    exit_code = 1


class DomainError(TSLabError, ValueError):
    """Argument outside the mathematical domain of a bound."""
    exit_code = 1


class NumericalDegeneracyError(TSLabError, ArithmeticError):
    """A factorization or eigen-solver could not proceed."""
    exit_code = 1


class InvariantFailure(TSLabError):
    """A deterministic invariant did not hold (audit mode)."""
    exit_code = 2


class OutputError(TSLabError, OSError):
    exit_code = 3
