"""Numerical toolkit for the time-fractional semilinear heat equation

    d_t^alpha u - Laplace u = u^p,   u(0) = mu >= 0,

in dimensions 1 to 3: Mittag-Leffler and Mainardi special functions, the
linear solution operators on periodic grids, parametric initial data,
ball-mass solvability criteria, a product-integration solver with blow-up
detection, lifespan bisection and scaling sweeps.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    EvaluationError,
    FracHeatError,
    RegressionError,
    SamplingError,
    SweepError,
)

__all__ = [
    "__version__",
    "FracHeatError",
    "DomainError",
    "EvaluationError",
    "SamplingError",
    "RegressionError",
    "SweepError",
]
