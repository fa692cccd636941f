"""
Domain layer - Distributions and samples
Implements the shared value types (DiscreteDistribution, EmpiricalSample)
and the elementary arithmetic on them: empirical counting, information
divergence and Pearson's chi-square.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy.special import entr, rel_entr

from rdgof.domain.errors import InputError

NORMALIZATION_TOL = 1e-12
TWO_PI = 2.0 * np.pi


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


def _as_array(values: Iterable) -> np.ndarray:
    if isinstance(values, np.ndarray):
        return values
    return np.asarray(list(values), dtype=float)


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """
    Probability vector over the alphabet {0, ..., l-1}
    Rejected, never renormalised, when the entries do not sum to one.
    """
    probs: np.ndarray

    def __post_init__(self):
        """Validate the vector after initialization"""
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise InputError("A distribution needs a non-empty 1-d probability vector")
        if not np.all(np.isfinite(probs)):
            raise InputError("Probabilities must be finite")
        if np.any(probs < 0.0):
            raise InputError("Probabilities must be nonnegative")
        total = float(np.sum(probs))
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InputError(f"Probabilities sum to {total!r}, expected 1 within {NORMALIZATION_TOL}")
        object.__setattr__(self, "probs", _frozen(probs))

    @property
    def alphabet_size(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.alphabet_size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def permuted(self, permutation: Sequence[int]) -> "DiscreteDistribution":
        """Relabel the alphabet: entry i of the result is entry permutation[i] of self"""
        return DiscreteDistribution(self.probs[np.asarray(permutation)])

    def to_list(self) -> list:
        return [float(p) for p in self.probs]


class SampleKind(Enum):
    """Kinds of observations the toolkit understands"""
    CATEGORICAL = "categorical"
    REAL = "real"
    CIRCULAR = "circular"


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """
    Raw observations with their kind
    Categorical labels are nonnegative integers, circular angles are
    reduced to [0, 2*pi) on ingestion.
    """
    kind: SampleKind
    values: np.ndarray

    def __post_init__(self):
        """Validate observations after initialization"""
        if not isinstance(self.kind, SampleKind):
            raise InputError(f"Invalid sample kind. Must be one of: {[k.value for k in SampleKind]}")

        values = np.array(self.values, dtype=float).ravel()
        if values.size < 1:
            raise InputError("A sample needs at least one observation")
        if not np.all(np.isfinite(values)):
            raise InputError("Observations must be finite")

        if self.kind is SampleKind.CATEGORICAL:
            if np.any(values < 0) or np.any(values != np.floor(values)):
                raise InputError("Categorical labels must be nonnegative integers")
            values = values.astype(np.int64)
        elif self.kind is SampleKind.CIRCULAR:
            values = np.mod(values, TWO_PI)
            # mod can round up to exactly 2*pi for tiny negative inputs
            values[values >= TWO_PI] = 0.0

        object.__setattr__(self, "values", _frozen(values))

    @property
    def n(self) -> int:
        return int(self.values.size)

    @classmethod
    def categorical(cls, labels: Iterable[int]) -> "EmpiricalSample":
        return cls(SampleKind.CATEGORICAL, _as_array(labels))

    @classmethod
    def real(cls, values: Iterable[float]) -> "EmpiricalSample":
        return cls(SampleKind.REAL, _as_array(values))

    @classmethod
    def circular(cls, angles: Iterable[float]) -> "EmpiricalSample":
        return cls(SampleKind.CIRCULAR, _as_array(angles))

    @classmethod
    def from_degrees(cls, degrees: Iterable[float]) -> "EmpiricalSample":
        return cls.circular(np.deg2rad(_as_array(degrees)))

    def require(self, kind: SampleKind) -> "EmpiricalSample":
        """Return self, or raise if the sample is of another kind"""
        if self.kind is not kind:
            raise InputError(f"Expected a {kind.value} sample, got {self.kind.value}")
        return self


def uniform(l: int) -> DiscreteDistribution:
    """Uniform distribution on an alphabet of size l"""
    if l < 1:
        raise InputError(f"Alphabet size must be positive, got {l}")
    return DiscreteDistribution(np.full(l, 1.0 / l))


def empirical_distribution(sample: EmpiricalSample, l: int) -> DiscreteDistribution:
    """
    Relative label frequencies of a categorical sample

    Args:
        sample: Categorical sample
        l: Alphabet size

    Returns:
        DiscreteDistribution: probs[i] = count(i) / n

    Raises:
        InputError: If a label is >= l or the sample is not categorical
    """
    sample.require(SampleKind.CATEGORICAL)
    if l < 1:
        raise InputError(f"Alphabet size must be positive, got {l}")
    largest = int(sample.values.max())
    if largest >= l:
        raise InputError(f"Label {largest} out of range for alphabet size {l}")
    counts = np.bincount(sample.values, minlength=l)
    return DiscreteDistribution(counts / sample.n)


def _check_same_alphabet(p: DiscreteDistribution, q: DiscreteDistribution) -> None:
    if p.alphabet_size != q.alphabet_size:
        raise InputError(f"Alphabet sizes differ: {p.alphabet_size} vs {q.alphabet_size}")


def divergence_discrete(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """
    Information divergence D(p||q) in nats

    0*ln(0/q) counts as 0; the result is +inf when p puts mass where q
    does not.
    """
    _check_same_alphabet(p, q)
    return float(np.sum(rel_entr(p.probs, q.probs)))


def pearson_chi2(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Pearson's chi-square distance sum((p_i - q_i)^2 / q_i)"""
    _check_same_alphabet(p, q)
    if np.any(q.probs == 0.0):
        raise InputError("Pearson chi-square needs a reference distribution with full support")
    return float(np.sum((p.probs - q.probs) ** 2 / q.probs))


def entropy(p: DiscreteDistribution) -> float:
    """Shannon entropy in nats"""
    return float(np.sum(entr(p.probs)))
