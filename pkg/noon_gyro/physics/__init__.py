from .models import (
    EXPERIMENT_N1,
    EXPERIMENT_N2,
    InterferometerGeometry,
    RateModelParams,
    SensitivityLimits,
    normalize_phase,
)
from .sagnac import (
    detection_probability,
    expected_rate,
    fringe_frequency,
    fringe_period,
    phase_sensitivity_limits,
    rate_derivative,
    sagnac_phase,
    sagnac_scale_factor,
    sagnac_time_delay,
)

__all__ = [
    "InterferometerGeometry",
    "RateModelParams",
    "SensitivityLimits",
    "EXPERIMENT_N1",
    "EXPERIMENT_N2",
    "normalize_phase",
    "sagnac_scale_factor",
    "sagnac_phase",
    "sagnac_time_delay",
    "detection_probability",
    "expected_rate",
    "rate_derivative",
    "fringe_frequency",
    "fringe_period",
    "phase_sensitivity_limits",
]
