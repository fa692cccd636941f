"""
Application Service - Rate-distortion solver
Blahut-Arimoto alternating minimisation for finite alphabets: the optimal
test channel and its (rate, distortion) point at a given slope beta, and
the inversion from a distortion level d0 to beta.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import logsumexp, rel_entr

from rdgof.domain.distortion import DistortionSpec, RDPoint
from rdgof.domain.distributions import DiscreteDistribution
from rdgof.domain.errors import ConvergenceError, DistortionRangeError
from rdgof.domain.kernels import DiscreteChannel

logger = logging.getLogger(__name__)

BETA_CAP = 1e6
DISTORTION_TOL = 1e-8
# reproduction symbols whose output mass falls below this are pruned
_PRUNE_LOG_MASS = math.log(1e-300)


class SolverConfig(BaseModel):
    """Parameters of one Blahut-Arimoto solve"""
    model_config = ConfigDict(frozen=True)

    beta: float = Field(0.0, ge=0, le=BETA_CAP, description="Slope parameter of the rate-distortion curve")
    tol: float = Field(1e-10, gt=0, description="Stop when the rate changes by less than this")
    max_iter: int = Field(100_000, ge=1, description="Iteration budget")
    reproduction_size: Optional[int] = Field(
        None, ge=1, description="Reproduction alphabet size m (defaults to the source alphabet size)"
    )

    def with_beta(self, beta: float) -> "SolverConfig":
        return self.model_copy(update={"beta": beta})


@dataclass(frozen=True)
class IterationState:
    """One Blahut-Arimoto iterate: channel rows, output marginal and its point"""
    iteration: int
    channel: np.ndarray
    marginal: np.ndarray
    rate: float
    distortion: float

    def objective(self, beta: float) -> float:
        """Lagrangian rate + beta * distortion"""
        return self.rate + beta * self.distortion


@dataclass(frozen=True)
class SolverResult:
    channel: DiscreteChannel
    point: RDPoint
    iterations: int


class BlahutArimotoSolver:
    """
    Rate-distortion solver for a fixed source and distortion function

    Holds only the problem data; every solve runs on local state, so one
    instance can serve several solves, also concurrently.
    """

    def __init__(self, source: DiscreteDistribution, distortion: DistortionSpec,
                 reproduction_size: Optional[int] = None):
        """
        Initialize the solver with its problem data

        Args:
            source: Source distribution p(x)
            distortion: Hamming or matrix distortion
            reproduction_size: Reproduction alphabet size m (defaults to l)
        """
        self._source = source
        l = source.alphabet_size
        self._matrix = np.asarray(distortion.to_matrix(l, reproduction_size), dtype=float)
        # symbols with p(x) = 0 do not take part in the iteration
        self._support = source.probs > 0
        self._log_p = np.log(source.probs[self._support])
        self._d = self._matrix[self._support]

    @property
    def source(self) -> DiscreteDistribution:
        return self._source

    @property
    def distortion_matrix(self) -> np.ndarray:
        return self._matrix

    def distortion_range(self) -> Tuple[float, float]:
        """(D_min, D_max): the beta -> infinity and rate-zero distortions"""
        p = self._source.probs
        lowest = float(p @ self._matrix.min(axis=1))
        rate_zero = float((p @ self._matrix).min())
        return lowest, rate_zero

    def _state(self, iteration: int, log_channel: np.ndarray) -> IterationState:
        channel = np.exp(log_channel)
        p = np.exp(self._log_p)
        marginal = p @ channel
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = float(np.sum(p[:, None] * rel_entr(channel, marginal[None, :])))
        distortion = float(np.sum(p[:, None] * channel * self._d))
        return IterationState(iteration, channel, marginal, max(rate, 0.0), max(distortion, 0.0))

    def _channel_update(self, log_marginal: np.ndarray, beta: float) -> np.ndarray:
        log_channel = log_marginal[None, :] - beta * self._d
        return log_channel - logsumexp(log_channel, axis=1, keepdims=True)

    def iterate(self, config: SolverConfig) -> Iterator[IterationState]:
        """
        Yield successive iterates, starting from a uniform output marginal

        Each step sets q(y) = sum_x p(x) W(y|x) and W(y|x) proportional to
        q(y) exp(-beta d(x, y)); the rate + beta * distortion objective never
        increases along the sequence.
        """
        m = self._matrix.shape[1]
        log_marginal = np.full(m, -math.log(m))
        for iteration in range(1, config.max_iter + 1):
            log_channel = self._channel_update(log_marginal, config.beta)
            yield self._state(iteration, log_channel)
            log_marginal = logsumexp(self._log_p[:, None] + log_channel, axis=0)
            log_marginal[log_marginal < _PRUNE_LOG_MASS] = -np.inf

    def _full_channel(self, state: IterationState, beta: float) -> np.ndarray:
        """Reinsert rows of symbols with p(x) = 0 as q-weighted exponential rows"""
        if np.all(self._support):
            return state.channel
        with np.errstate(divide="ignore"):
            log_marginal = np.log(state.marginal)
        log_rows = log_marginal[None, :] - beta * self._matrix[~self._support]
        rows = np.exp(log_rows - logsumexp(log_rows, axis=1, keepdims=True))
        full = np.empty_like(self._matrix)
        full[self._support] = state.channel
        full[~self._support] = rows
        return full

    def solve(self, config: SolverConfig) -> SolverResult:
        """
        Run the alternation to convergence

        Raises:
            ConvergenceError: If the rate is still moving after max_iter steps
        """
        previous_rate = math.inf
        state = None
        for state in self.iterate(config):
            if abs(state.rate - previous_rate) < config.tol:
                result = self._result(state, config.beta)
                logger.debug("beta=%g converged after %d iterations: rate=%.12g distortion=%.12g",
                             config.beta, state.iteration, result.point.rate, result.point.distortion)
                return result
            previous_rate = state.rate
        last = self._result(state, config.beta)
        raise ConvergenceError(
            f"Blahut-Arimoto did not converge in {config.max_iter} iterations at beta={config.beta} "
            f"(last rate {last.point.rate:.12g}, distortion {last.point.distortion:.12g})",
            channel=last.channel,
            point=last.point,
            iterations=config.max_iter,
        )

    def _result(self, state: IterationState, beta: float) -> SolverResult:
        channel = DiscreteChannel(self._full_channel(state, beta))
        return SolverResult(channel, RDPoint(state.rate, state.distortion, beta), state.iteration)


def blahut_arimoto(source: DiscreteDistribution, distortion: DistortionSpec,
                   config: SolverConfig) -> Tuple[DiscreteChannel, RDPoint]:
    """Optimal test channel and rate-distortion point at slope config.beta"""
    result = BlahutArimotoSolver(source, distortion, config.reproduction_size).solve(config)
    return result.channel, result.point


def solve_for_distortion(source: DiscreteDistribution, distortion: DistortionSpec, target_d0: float,
                         config: SolverConfig = SolverConfig()) -> Tuple[DiscreteChannel, RDPoint, float]:
    """
    Channel whose expected distortion equals target_d0

    Bisection over beta; the bracket [0, beta_max] starts at beta_max = 1 and
    doubles until it contains the target. The achievable interval runs from
    sum_x p(x) min_y d(x, y) up to the rate-zero distortion
    D_max = min_y sum_x p(x) d(x, y).

    Returns:
        (channel, point, beta)

    Raises:
        DistortionRangeError: If target_d0 is outside the achievable interval or
            the bisection cannot bring the distortion within DISTORTION_TOL of it
    """
    solver = BlahutArimotoSolver(source, distortion, config.reproduction_size)
    lower_distortion, upper_distortion = solver.distortion_range()
    if not max(lower_distortion, 0.0) < target_d0 < upper_distortion:
        raise DistortionRangeError(f"Target distortion {target_d0} is not achievable",
                                   lower_distortion, upper_distortion)

    low, high = 0.0, 1.0
    result = solver.solve(config.with_beta(high))
    while result.point.distortion > target_d0:
        low = high
        high = 2.0 * high
        if high > BETA_CAP:
            raise DistortionRangeError(
                f"Target distortion {target_d0} needs beta beyond {BETA_CAP:g}",
                result.point.distortion, upper_distortion,
            )
        result = solver.solve(config.with_beta(high))
    logger.debug("beta bracket [%g, %g] for d0=%g", low, high, target_d0)

    for _ in range(200):
        if abs(result.point.distortion - target_d0) < DISTORTION_TOL:
            break
        middle = 0.5 * (low + high)
        result = solver.solve(config.with_beta(middle))
        if result.point.distortion > target_d0:
            low = middle
        else:
            high = middle
        if high - low <= 4 * np.finfo(float).eps * high:
            break
    if abs(result.point.distortion - target_d0) >= DISTORTION_TOL:
        raise DistortionRangeError(
            f"Target distortion {target_d0} not reached: bisection stopped at "
            f"{result.point.distortion:.12g} (beta={result.point.beta:.6g})",
            lower_distortion, upper_distortion,
        )
    return result.channel, result.point, result.point.beta
