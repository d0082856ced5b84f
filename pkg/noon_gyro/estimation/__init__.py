from .bands import band_coverage, prediction_band
from .fitting import (
    PARAMETERS,
    FitResult,
    FitSettings,
    fit_arrays,
    fit_rate_model,
    initial_guess,
)
from .resampling import ParameterSpread, bootstrap_errors, monte_carlo_errors

__all__ = [
    "PARAMETERS",
    "FitResult",
    "FitSettings",
    "ParameterSpread",
    "band_coverage",
    "bootstrap_errors",
    "fit_arrays",
    "fit_rate_model",
    "initial_guess",
    "monte_carlo_errors",
    "prediction_band",
]
