"""
Domain layer - Result records
Serializable outcomes of tests, calibrations and simulation studies.
"""
import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

MAX_SEED = 2 ** 64 - 1


class CalibrationResult(BaseModel):
    """Simulated null distribution of a statistic and its critical value K_n"""
    model_config = ConfigDict(frozen=True)

    null_samples: List[float]
    critical_value: float
    significance: float = Field(..., gt=0, lt=1)
    replications: int = Field(..., ge=1)
    seed: int = Field(..., ge=0, le=MAX_SEED)
    n: int = Field(..., ge=1)
    statistic: Dict[str, Any] = Field(default_factory=dict)
    null: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def critical_value_is_order_statistic(self) -> "CalibrationResult":
        """K_n must be the ceil((1 - significance) R)-th order statistic of the samples"""
        if len(self.null_samples) != self.replications:
            raise ValueError("null_samples must hold one value per replication")
        rank = order_statistic_rank(self.replications, self.significance)
        expected = sorted(self.null_samples)[rank - 1]
        if not (expected == self.critical_value or (math.isnan(expected) and math.isnan(self.critical_value))):
            raise ValueError(f"critical_value {self.critical_value} is not order statistic {rank}")
        return self


class PowerEstimate(BaseModel):
    """Rejection frequency under an alternative, with its binomial standard error"""
    model_config = ConfigDict(frozen=True)

    power: float = Field(..., ge=0, le=1)
    stderr: float = Field(..., ge=0)
    replications: int = Field(..., ge=1)
    critical_value: float
    n: int = Field(..., ge=1)
    seed: int = Field(..., ge=0, le=MAX_SEED)
    alternative: Dict[str, Any] = Field(default_factory=dict)


class GaussianityDiagnostics(BaseModel):
    """Moment and Q-Q summaries of simulated statistic values; NaN when degenerate"""
    model_config = ConfigDict(frozen=True)

    skewness: float
    excess_kurtosis: float
    qq_correlation: float
    replications: int
    degenerate: bool = False


class ConsistencyRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    median_null: float
    isotonic_median: float
    median_stderr: float
    alternative_q05: Optional[float] = None


class ConsistencyReport(BaseModel):
    """Median null statistic along an n grid and the alternative lower-bound check"""
    model_config = ConfigDict(frozen=True)

    rows: List[ConsistencyRow]
    isotonic_residual: float
    noise_estimate: float
    null_monotone: bool
    target_divergence: Optional[float] = None
    epsilon: Optional[float] = None
    alternative_bound_met: Optional[bool] = None


class BahadurSlopeRow(BaseModel):
    """-(1/n) ln Pr_0(statistic >= K_n) for one sample size"""
    model_config = ConfigDict(frozen=True)

    n: int
    threshold: float
    log_tail_probability: float
    slope: float
    unreachable: bool = False


class TestReport(BaseModel):
    """Outcome of one goodness-of-fit test, with the configuration that produced it"""
    __test__ = False  # not a pytest test class
    model_config = ConfigDict(frozen=True)

    command: str = "test"
    statistic: float
    kernel: Dict[str, Any] = Field(default_factory=dict)
    n: int = Field(..., ge=1)
    critical_value: Optional[float] = None
    p_value: Optional[float] = None
    decision: Optional[str] = None
    seed: int = Field(0, ge=0, le=MAX_SEED)
    config: Dict[str, Any] = Field(default_factory=dict)
    tool_version: str = ""

    @field_validator("p_value")
    @classmethod
    def p_value_in_unit_interval(cls, v: Optional[float]) -> Optional[float]:
        """Validate p_value lies in [0, 1] when present"""
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValueError(f"p_value must lie in [0, 1], got {v}")
        return v

    @field_validator("decision")
    @classmethod
    def decision_valid(cls, v: Optional[str]) -> Optional[str]:
        """Validate decision is 'accept' or 'reject' when present"""
        if v is not None and v not in ("accept", "reject"):
            raise ValueError("decision must be 'accept' or 'reject'")
        return v


def order_statistic_rank(replications: int, significance: float) -> int:
    """1-based rank ceil((1 - significance) R), clipped to [1, R]"""
    # the small offset keeps (1 - 0.05) * 100 from rounding up to rank 96
    rank = math.ceil((1.0 - significance) * replications - 1e-9)
    return min(max(rank, 1), replications)
