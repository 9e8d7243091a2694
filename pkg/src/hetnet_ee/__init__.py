"""Coverage and energy-efficiency analysis of two-tier networks with extra
cell range expansion, by closed-form integration and Monte Carlo simulation."""

__version__ = "0.1.0"

from .model import (CREPolicy, NetworkParams, ScheduleClass, TierParams, UserSet, ValidationError,
                    build_params, default_params)

__all__ = ["CREPolicy", "NetworkParams", "ScheduleClass", "TierParams", "UserSet", "ValidationError",
           "build_params", "default_params", "__version__"]
