"""Exception hierarchy. The CLI maps each class to an exit code."""


class NiromError(Exception):
    exit_code = 3


class ConfigError(NiromError, ValueError):
    """Invalid parameters or flags."""

    exit_code = 1


class DataError(NiromError, ValueError):
    """Malformed input data or files."""

    exit_code = 2

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class NumericalError(NiromError, ArithmeticError):
    """A numerical procedure failed its own accuracy check."""

    exit_code = 3


class CflError(ConfigError):
    def __init__(self, step, stable_step):
        super().__init__(
            f"time step {step:g} s violates CFL; use a step <= {stable_step:.6g} s"
        )
        self.step = step
        self.stable_step = stable_step
