"""Exception types, grouped by how a command-line run should exit."""


class ConfigError(ValueError):
    """Invalid parameters or configuration (exit code 1)."""


class DataError(ValueError):
    """Unusable input data: bad files, empty or degenerate classes (exit code 2)."""


class NumericalError(ArithmeticError):
    """A computation that is ill-posed for the given data (exit code 3)."""
