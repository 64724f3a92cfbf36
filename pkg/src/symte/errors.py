"""Exception hierarchy shared by the library and the command line."""


class SymteError(Exception):
    """Base class for all errors raised by symte."""


class DataError(SymteError, ValueError):
    """Input data cannot support the requested computation."""


class DegenerateVarianceError(SymteError, ArithmeticError):
    pass


class NonConvergenceError(SymteError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    The best objective value reached is kept on ``best_residual``.
    """

    def __init__(self, message, best_residual=float("nan")):
        super().__init__(message)
        self.best_residual = best_residual
