"""
Application Ports - Sampler Interface
Services that simulate data (null calibration, power studies) depend on this
abstraction; concrete generators live in the sampling adapter.
"""
from abc import ABC, abstractmethod

import numpy as np

from rdgof.domain.distributions import EmpiricalSample, SampleKind


class Sampler(ABC):
    """
    Source of iid samples from a fixed distribution
    Implementations draw only from the generator they are handed, so a
    replication is reproducible from its generator alone.
    """

    kind: SampleKind

    @abstractmethod
    def draw(self, n: int, rng: np.random.Generator) -> EmpiricalSample:
        """
        Draw an iid sample

        Args:
            n: Sample size
            rng: Generator to consume

        Returns:
            EmpiricalSample: n observations
        """
        pass

    @abstractmethod
    def describe(self) -> dict:
        """
        Parameters identifying the distribution, for report echoes

        Returns:
            dict: JSON-serialisable description
        """
        pass
