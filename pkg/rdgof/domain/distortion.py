"""
Domain layer - Distortion functions and rate-distortion points
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rdgof.domain.errors import InputError


@dataclass(frozen=True)
class RDPoint:
    """(rate, distortion, slope) triple on a rate-distortion curve; rate in nats"""
    rate: float
    distortion: float
    beta: float

    def __post_init__(self):
        """Validate the point after initialization"""
        if self.rate < 0 or self.distortion < 0 or self.beta < 0:
            raise InputError(f"Rate, distortion and slope must be nonnegative, got {self}")

    def to_dict(self) -> dict:
        return {"rate": self.rate, "distortion": self.distortion, "beta": self.beta}


class DistortionSpec(ABC):
    """A distortion function d(x, y) >= 0"""

    @abstractmethod
    def evaluate(self, x, y):
        """Distortion between source point(s) x and reproduction point(s) y"""

    def to_matrix(self, l: int, m: Optional[int] = None) -> np.ndarray:
        """l x m matrix d[x, y] for finite alphabets"""
        raise InputError(f"{type(self).__name__} has no finite-alphabet matrix form")


@dataclass(frozen=True, eq=False)
class MatrixDistortion(DistortionSpec):
    """Arbitrary nonnegative l x m distortion matrix"""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or 0 in matrix.shape:
            raise InputError("Distortion matrix must be a non-empty 2-d array")
        if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
            raise InputError("Distortion matrix entries must be finite and nonnegative")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def evaluate(self, x, y):
        return self.matrix[x, y]

    def to_matrix(self, l: int, m: Optional[int] = None) -> np.ndarray:
        m = self.matrix.shape[1] if m is None else m
        if self.matrix.shape != (l, m):
            raise InputError(f"Distortion matrix is {self.matrix.shape}, expected {(l, m)}")
        return self.matrix


@dataclass(frozen=True)
class HammingDistortion(DistortionSpec):
    """d(x, y) = 0 if x == y else 1"""
    l: int

    def __post_init__(self):
        if self.l < 1:
            raise InputError(f"Alphabet size must be positive, got {self.l}")

    def evaluate(self, x, y):
        return np.where(np.asarray(x) == np.asarray(y), 0.0, 1.0)

    def to_matrix(self, l: int, m: Optional[int] = None) -> np.ndarray:
        m = self.l if m is None else m
        if l != self.l:
            raise InputError(f"Hamming distortion is for l={self.l}, got source alphabet {l}")
        return 1.0 - np.eye(l, m)


class SquaredEuclideanReal(DistortionSpec):
    """d(x, y) = (x - y)^2 on the real line"""

    def evaluate(self, x, y):
        return (np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) ** 2


class SquaredChordCircle(DistortionSpec):
    """
    Squared Euclidean distance between points on the unit circle
    d(t1, t2) = 2 - 2 cos(t2 - t1) = 4 sin^2((t2 - t1) / 2), range [0, 4]
    """

    def evaluate(self, x, y):
        half = (np.asarray(y, dtype=float) - np.asarray(x, dtype=float)) / 2.0
        return 4.0 * np.sin(half) ** 2
