"""
Sampling Adapter - numpy Generator samplers
Concrete Sampler implementations for the null models and the alternatives
used in power studies. Every draw consumes only the generator it is given.
"""
import numpy as np

from rdgof.application.ports.sampler import Sampler
from rdgof.application.services.calibration import NullModel
from rdgof.domain.distributions import DiscreteDistribution, EmpiricalSample, SampleKind
from rdgof.domain.errors import InputError


class UniformDiscreteSampler(Sampler):
    """Uniform labels on {0, ..., l-1}"""
    kind = SampleKind.CATEGORICAL

    def __init__(self, l: int):
        if l < 1:
            raise InputError(f"Alphabet size must be positive, got {l}")
        self.l = l

    @property
    def alphabet_size(self) -> int:
        return self.l

    def draw(self, n: int, rng: np.random.Generator) -> EmpiricalSample:
        return EmpiricalSample.categorical(rng.integers(0, self.l, size=n))

    def describe(self) -> dict:
        return {"model": "uniform", "l": self.l}


class CategoricalSampler(Sampler):
    """Labels drawn from an arbitrary discrete distribution"""
    kind = SampleKind.CATEGORICAL

    def __init__(self, distribution: DiscreteDistribution):
        self.distribution = distribution

    @property
    def alphabet_size(self) -> int:
        return self.distribution.alphabet_size

    def draw(self, n: int, rng: np.random.Generator) -> EmpiricalSample:
        labels = rng.choice(self.distribution.alphabet_size, size=n, p=self.distribution.probs)
        return EmpiricalSample.categorical(labels)

    def describe(self) -> dict:
        return {"model": "categorical", "probs": self.distribution.to_list()}


class NormalSampler(Sampler):
    """N(mean, sd^2); the default is the standard normal null"""
    kind = SampleKind.REAL

    def __init__(self, mean: float = 0.0, sd: float = 1.0):
        if not sd > 0:
            raise InputError(f"Standard deviation must be positive, got {sd}")
        self.mean = mean
        self.sd = sd

    def draw(self, n: int, rng: np.random.Generator) -> EmpiricalSample:
        return EmpiricalSample.real(self.mean + self.sd * rng.standard_normal(n))

    def describe(self) -> dict:
        if self.mean == 0.0 and self.sd == 1.0:
            return {"model": "normal"}
        return {"model": "normal", "mean": self.mean, "sd": self.sd}


class UniformCircleSampler(Sampler):
    """Angles uniform on [0, 2*pi)"""
    kind = SampleKind.CIRCULAR

    def draw(self, n: int, rng: np.random.Generator) -> EmpiricalSample:
        return EmpiricalSample.circular(rng.uniform(0.0, 2.0 * np.pi, size=n))

    def describe(self) -> dict:
        return {"model": "circular"}


class VonMisesSampler(Sampler):
    """Angles from vM(center, kappa)"""
    kind = SampleKind.CIRCULAR

    def __init__(self, center: float, kappa: float):
        if kappa < 0:
            raise InputError(f"kappa must be nonnegative, got {kappa}")
        self.center = center
        self.kappa = kappa

    def draw(self, n: int, rng: np.random.Generator) -> EmpiricalSample:
        return EmpiricalSample.circular(rng.vonmises(self.center, self.kappa, size=n))

    def describe(self) -> dict:
        return {"model": "vonmises", "center": self.center, "kappa": self.kappa}


def sampler_for_null(model: NullModel, l: int = 2) -> Sampler:
    """Sampler of a null model; l is used by the discrete null only"""
    if model is NullModel.UNIFORM_DISCRETE:
        return UniformDiscreteSampler(l)
    if model is NullModel.STANDARD_NORMAL:
        return NormalSampler()
    return UniformCircleSampler()


def parse_alternative(spec: str) -> Sampler:
    """
    Parse an alternative description

    Accepted forms: vonmises:CENTER:KAPPA, normal:MEAN:SD,
    categorical:P1,P2,... and uniform:L, circular, normal.

    Raises:
        InputError: If the description is malformed
    """
    name, _, rest = spec.partition(":")
    parts = rest.split(":") if rest else []
    try:
        if name == "vonmises" and len(parts) == 2:
            return VonMisesSampler(float(parts[0]), float(parts[1]))
        if name == "normal" and len(parts) in (0, 2):
            return NormalSampler(*(float(p) for p in parts))
        if name == "categorical" and len(parts) == 1:
            return CategoricalSampler(DiscreteDistribution([float(p) for p in parts[0].split(",") if p.strip()]))
        if name == "uniform" and len(parts) == 1:
            return UniformDiscreteSampler(int(parts[0]))
        if name == "circular" and not parts:
            return UniformCircleSampler()
    except InputError:
        raise
    except ValueError as e:
        raise InputError(f"Malformed alternative '{spec}': {e}")
    raise InputError(
        f"Unknown alternative '{spec}'. Use vonmises:CENTER:KAPPA, normal:MEAN:SD, "
        "categorical:P1,P2,..., uniform:L or circular"
    )
