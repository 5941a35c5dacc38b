"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible with the operation."""


class ConvergenceError(ArithmeticError):
    """An iterative routine hit its iteration cap before meeting tolerance."""


class NonFiniteError(FloatingPointError):
    """A NaN or Inf was produced or supplied where finite values are required.

    ``op`` names the operation kind that first produced the bad value, when known.
    """

    def __init__(self, msg: str, op: str | None = None):
        super().__init__(msg)
        self.op = op


class SingularPointError(ZeroDivisionError):
    """Jet division by a series whose value coefficient is zero."""


class UnsupportedOrderError(ValueError):
    """Requested derivative order exceeds what the jet engine carries."""


class StateError(ValueError):
    """Optimizer state does not match the parameters it is applied to."""


class ConfigError(ValueError):
    """Invalid experiment or sampling configuration.

    ``line`` and ``column`` locate the problem in the source file when known.
    """

    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(msg + where)
        self.line = line
        self.column = column


class DivergenceError(RuntimeError):
    """Training produced a non-finite or exploding loss."""

    def __init__(self, msg: str, iteration: int | None = None, window: int | None = None):
        super().__init__(msg)
        self.iteration = iteration
        self.window = window
