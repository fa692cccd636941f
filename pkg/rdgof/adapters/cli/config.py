"""
CLI Adapter - Run configuration
One immutable RunConfig per invocation, built from flags or taken from the
config embedded in an earlier report.
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from rdgof.domain.quadrature import QuadratureConfig
from rdgof.domain.reports import MAX_SEED

COMMANDS = ("test", "rd-solve", "calibrate", "power", "diagnose")
NULLS = ("uniform", "discrete", "normal", "circular")
STATISTICS = ("rd", "lr", "pearson", "entropy", "rayleigh", "second-moment")

# nulls each statistic is defined for
STATISTIC_NULLS = {
    "rd": NULLS,
    "lr": ("uniform", "discrete"),
    "pearson": ("uniform", "discrete"),
    "entropy": ("normal",),
    "rayleigh": ("circular",),
    "second-moment": ("normal",),
}


# ===== DTOs (Data Transfer Objects) =====

class RunConfig(BaseModel):
    """Effective configuration of one command"""
    model_config = ConfigDict(frozen=True)

    command: str = Field(..., description="Subcommand to run")
    null: Optional[str] = Field(None, description="Null model: uniform, discrete, normal or circular")
    l: Optional[int] = Field(None, ge=1, description="Alphabet size of the uniform null")
    probs: Optional[List[float]] = Field(None, description="Null (or source) probabilities")
    input: Optional[str] = Field(None, description="Observation file, '-' for stdin")
    degrees: bool = Field(False, description="Angles in the input are in degrees")
    statistic: str = Field("rd", description="Test statistic")
    alpha: Optional[float] = Field(None, description="Mixture / channel weight")
    kappa: Optional[float] = Field(None, description="von Mises concentration")
    d0: Optional[float] = Field(None, description="Distortion level")
    beta: Optional[float] = Field(None, ge=0, description="Solver slope")
    matrix: Optional[str] = Field(None, description="Distortion matrix file")
    tol: float = Field(1e-10, gt=0, description="Solver tolerance on the rate change")
    max_iter: int = Field(100_000, ge=1, description="Solver iteration budget")
    bins: Optional[int] = Field(None, ge=2, description="Bins of the entropy statistic")
    gamma: float = Field(0.5, gt=0, lt=1, description="Bin exponent, k = ceil(n^gamma)")
    significance: float = Field(0.05, gt=0, lt=1, description="Test level")
    calibrate: bool = Field(False, description="Calibrate the test by Monte Carlo")
    replications: int = Field(1000, ge=1, description="Monte Carlo replications")
    critical_value: Optional[float] = Field(None, description="Known critical value K_n")
    asymptotic: bool = Field(False, description="Chi-square calibration of the LR statistic")
    n: Optional[int] = Field(None, ge=1, description="Sample size for simulation commands")
    alternative: Optional[str] = Field(None, description="Alternative for power studies")
    seed: int = Field(0, ge=0, le=MAX_SEED, description="Master seed")
    workers: int = Field(1, ge=1, description="Threads for replications")
    output: Optional[str] = Field(None, description="Report path, stdout when absent")
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)

    @field_validator("command")
    @classmethod
    def command_valid(cls, v: str) -> str:
        """Validate command is known"""
        if v not in COMMANDS:
            raise ValueError(f"command must be one of {', '.join(COMMANDS)}")
        return v

    @field_validator("null")
    @classmethod
    def null_valid(cls, v: Optional[str]) -> Optional[str]:
        """Validate null model is known if provided"""
        if v is not None and v.lower() not in NULLS:
            raise ValueError(f"null must be one of {', '.join(NULLS)}")
        return v.lower() if v else None

    @field_validator("statistic")
    @classmethod
    def statistic_valid(cls, v: str) -> str:
        """Validate statistic is known"""
        if v.lower() not in STATISTICS:
            raise ValueError(f"statistic must be one of {', '.join(STATISTICS)}")
        return v.lower()

    @model_validator(mode="after")
    def parameters_consistent(self) -> "RunConfig":
        """Validate the combination of null, statistic and kernel parameters"""
        if self.command == "rd-solve":
            if (self.beta is None) == (self.d0 is None):
                raise ValueError("rd-solve needs exactly one of beta or d0")
            if self.matrix is None and self.l is None and self.probs is None:
                raise ValueError("rd-solve needs a distortion matrix file, l or source probabilities")
            return self

        if self.null is None:
            raise ValueError(f"{self.command} needs a null model")
        if self.null == "uniform" and self.l is None:
            raise ValueError("the uniform null needs an alphabet size l")
        if self.null == "discrete" and self.probs is None:
            raise ValueError("the discrete null needs its probabilities")
        if self.null not in STATISTIC_NULLS[self.statistic]:
            raise ValueError(f"the {self.statistic} statistic is not defined for the {self.null} null")

        if self.statistic == "rd":
            self._check_kernel_parameters()
        elif self.alpha is not None or self.kappa is not None or self.d0 is not None:
            raise ValueError(f"the {self.statistic} statistic takes no kernel parameter")

        if self.asymptotic and self.statistic != "lr":
            raise ValueError("asymptotic calibration is available for the lr statistic only")
        if self.calibrate and (self.critical_value is not None or self.asymptotic):
            raise ValueError("choose one of calibrate, critical_value or asymptotic")
        if self.command == "test" and self.input is None:
            raise ValueError("test needs an input file")
        if self.command in ("calibrate", "power", "diagnose") and self.n is None:
            raise ValueError(f"{self.command} needs a sample size n")
        if self.command == "power" and self.alternative is None:
            raise ValueError("power needs an alternative")
        return self

    def _check_kernel_parameters(self) -> None:
        direct = self.kappa if self.null == "circular" else self.alpha
        if self.null == "circular" and self.alpha is not None:
            raise ValueError("use kappa, not alpha, for the circular test")
        if self.null != "circular" and self.kappa is not None:
            raise ValueError(f"use alpha, not kappa, for the {self.null} test")
        if (direct is None) == (self.d0 is None):
            name = "kappa" if self.null == "circular" else "alpha"
            raise ValueError(f"exactly one of {name} or d0 must be given")
        if self.null == "discrete" and self.d0 is None:
            raise ValueError("the discrete null needs d0 (its channel is solved numerically)")
        if self.null == "normal" and self.alpha is not None and self.alpha >= 1.0:
            raise ValueError("alpha must be < 1 for the normal test")

    def alphabet_size(self) -> Optional[int]:
        if self.probs is not None:
            return len(self.probs)
        return self.l
