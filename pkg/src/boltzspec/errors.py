"""Exception types shared across modules; the CLI maps them to exit codes."""


class BoltzspecError(Exception):
    exit_code = 1


class ConfigError(BoltzspecError, ValueError):
    exit_code = 2


class NumericalFailure(BoltzspecError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class QuadratureNotConverged(NumericalFailure):
    def __init__(self, delta, resolution):
        super().__init__(
            f"quadrature not certified: last doubling delta {delta:.3e} at {resolution}"
        )
        self.delta = delta
        self.resolution = resolution


class BudgetExceeded(BoltzspecError):
    exit_code = 4


class CacheMismatch(BoltzspecError):
    exit_code = 5


class FormatError(BoltzspecError, ValueError):
    """Corrupt, truncated or incompatible binary file."""

    exit_code = 5


class UnsupportedKernel(BoltzspecError, NotImplementedError):
    exit_code = 2
