"""
Domain layer - Error hierarchy
Validation problems are ValueErrors, numerical failures are ArithmeticErrors,
so callers can separate "bad input" from "the computation broke".
"""
from typing import Any, Optional


class RdGofError(Exception):
    """Base class of every error raised by the toolkit"""


class InputError(RdGofError, ValueError):
    """Malformed data: bad labels, mismatched lengths, unparseable lines"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ParameterError(RdGofError, ValueError):
    """A kernel or solver parameter lies outside its domain"""


class DistortionRangeError(RdGofError, ValueError):
    """Requested distortion level is not achievable"""

    def __init__(self, message: str, low: float, high: float):
        super().__init__(f"{message} (achievable interval: ({low:.12g}, {high:.12g}))")
        self.low = low
        self.high = high


class ConvergenceError(RdGofError, ArithmeticError):
    """
    Blahut-Arimoto iteration did not settle within max_iter

    The last iterate is kept so callers can inspect or reuse it.
    """

    def __init__(self, message: str, channel: Any, point: Any, iterations: int):
        super().__init__(message)
        self.channel = channel
        self.point = point
        self.iterations = iterations


class NumericError(RdGofError, ArithmeticError):
    """Overflow or quadrature failure"""


class SimulationError(RdGofError):
    """A statistic failed inside a Monte Carlo replication"""

    def __init__(self, replication_index: int, cause: BaseException):
        super().__init__(f"replication {replication_index} failed: {cause}")
        self.replication_index = replication_index
