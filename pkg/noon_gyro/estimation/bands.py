"""Poisson prediction bands around a fitted fringe."""

from typing import Tuple

import numpy as np
from scipy import stats

from noon_gyro.errors import ValidationError
from noon_gyro.physics.models import RateModelParams
from noon_gyro.physics.sagnac import expected_rate
from noon_gyro.simulation.models import BinnedSeries


def prediction_band(
    params: RateModelParams, omega, level: float = 0.99
) -> Tuple[np.ndarray, np.ndarray]:
    """Central Poisson quantiles (low, high) of the predicted count at each Ω."""
    if not 0.0 < level < 1.0:
        raise ValidationError(f"level must be in (0, 1), got {level}")
    mean = np.atleast_1d(np.asarray(expected_rate(params, np.asarray(omega, dtype=float))))
    tail = 0.5 * (1.0 - level)
    return stats.poisson.ppf(tail, mean), stats.poisson.ppf(1.0 - tail, mean)


def band_coverage(series: BinnedSeries, params: RateModelParams, level: float = 0.99) -> float:
    """Fraction of bins whose count lies inside the prediction band."""
    if len(series) == 0:
        raise ValidationError("cannot compute coverage of an empty series")
    low, high = prediction_band(params, series.reference_omega, level)
    inside = (series.counts >= low) & (series.counts <= high)
    return float(np.mean(inside))
