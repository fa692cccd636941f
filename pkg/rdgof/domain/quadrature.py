"""
Domain layer - Quadrature grids
Deterministic grids for the one-dimensional divergence integrals. Integrands
here are Gaussian or von Mises mixtures, for which the trapezoid rule is
spectrally accurate once the step resolves the narrowest component.
"""
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import trapezoid

logger = logging.getLogger(__name__)

# block length used when a (components x grid) table would be too large
_CELLS_PER_BLOCK = 4_000_000


class QuadratureConfig(BaseModel):
    """Grid settings for the continuous-case statistics"""
    model_config = ConfigDict(frozen=True)

    grid_points: int = Field(4096, ge=16, description="Minimum number of grid points")
    truncation_sigmas: float = Field(
        10.0, gt=0, description="Real line is cut this many component sds beyond the extreme means"
    )
    points_per_sigma: float = Field(
        8.0, ge=1, description="Grid points per component sd (per 1/sqrt(kappa) on the circle)"
    )


def line_grid(low_mean: float, high_mean: float, sigma: float, config: QuadratureConfig) -> np.ndarray:
    """
    Uniform grid on [low_mean - T*sigma, high_mean + T*sigma]

    The number of points is grid_points or enough to keep the step below
    sigma / points_per_sigma, whichever is larger.
    """
    low = low_mean - config.truncation_sigmas * sigma
    high = high_mean + config.truncation_sigmas * sigma
    needed = math.ceil((high - low) * config.points_per_sigma / sigma) + 1
    size = max(config.grid_points, needed)
    logger.debug("line grid [%g, %g] with %d points", low, high, size)
    return np.linspace(low, high, size)


def circle_grid(kappa: float, config: QuadratureConfig) -> np.ndarray:
    """Equispaced angles 2*pi*j/G, j < G, fine enough for concentration kappa"""
    needed = math.ceil(2.0 * math.pi * math.sqrt(max(kappa, 1.0)) * config.points_per_sigma)
    size = max(config.grid_points, needed)
    logger.debug("circle grid with %d points for kappa=%g", size, kappa)
    return 2.0 * math.pi * np.arange(size) / size


def integrate_line(values: np.ndarray, grid: np.ndarray) -> float:
    return float(trapezoid(values, grid))


def integrate_circle(values: np.ndarray) -> float:
    """Periodic trapezoid rule over a full circle_grid"""
    return float(2.0 * math.pi * np.mean(values))


def grid_blocks(grid_size: int, components: int):
    """Slices of the grid such that components * block stays bounded"""
    step = max(256, _CELLS_PER_BLOCK // max(components, 1))
    for start in range(0, grid_size, step):
        yield slice(start, min(start + step, grid_size))
