"""
Velocity estimation from counts and its precision.

The fringe R = a·(1 + cos x) + B with a = M/(2N) and x = N(SΩ + φ0) is
monotonic between consecutive extrema x = kπ. Inversion picks the branch that
contains a caller-supplied velocity, the way a gyroscope is read out around a
known operating point.
"""

import logging
import math
from typing import Tuple, Union

import numpy as np
from scipy import optimize

from noon_gyro.errors import AmbiguousBranchError, NoSignalError, ValidationError
from noon_gyro.physics.models import RateModelParams
from noon_gyro.physics.sagnac import expected_rate, fringe_period, rate_derivative
from noon_gyro.simulation import seeding

_logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

BIAS_GRID_POINTS = 1024
BIAS_TOLERANCE = 1e-6
# slopes below this fraction of M·S count as an extremum
FLAT_SLOPE = 1e-12


def _require_signal(params: RateModelParams) -> None:
    if params.photons_per_bin <= 0:
        raise NoSignalError("fringe amplitude M is zero; counts carry no velocity information")
    if params.scale_factor == 0:
        raise ValidationError("scale_factor is zero; counts carry no velocity information")


def _branch_index(params: RateModelParams, branch_center: ArrayLike) -> np.ndarray:
    n = params.photon_number
    turns = n * (params.scale_factor * np.asarray(branch_center, dtype=float) + params.phase_offset) / math.pi
    nearest = np.round(turns)
    on_extremum = np.abs(turns - nearest) <= 1e-12 * np.maximum(1.0, np.abs(turns))
    if np.any(on_extremum):
        raise AmbiguousBranchError(
            "branch center sits on a fringe extremum; shift it inside a monotonic branch"
        )
    return np.floor(turns)


def invert_rate(
    params: RateModelParams, count: ArrayLike, branch_center: ArrayLike
) -> Tuple[ArrayLike, ArrayLike]:
    """
    Velocity with expected_rate(params, Ω) = count on the branch containing branch_center.

    Counts outside [B, M/N + B] are clamped to the nearest bound. Returns
    (omega, clamped) with the shapes of the broadcast inputs.
    """
    _require_signal(params)
    n = params.photon_number
    a = 0.5 * params.amplitude
    k = _branch_index(params, branch_center)

    cosine = (np.asarray(count, dtype=float) - params.background_per_bin) / a - 1.0
    clamped = (cosine < -1.0) | (cosine > 1.0)
    base = np.arccos(np.clip(cosine, -1.0, 1.0))
    odd = np.remainder(k, 2.0) == 1.0
    x = k * math.pi + np.where(odd, math.pi - base, base)
    omega = (x / n - params.phase_offset) / params.scale_factor

    if np.ndim(omega) == 0:
        return float(omega), bool(clamped)
    if np.any(clamped):
        _logger.debug("clamped %d of %d counts before inversion", int(clamped.sum()), clamped.size)
    return omega, clamped


def propagated_uncertainty(params: RateModelParams, omega: ArrayLike) -> ArrayLike:
    """
    ΔΩ = √R / |∂R/∂Ω| from shot noise on the count.

    Returns +inf where the slope vanishes (fringe extrema, or M = 0).
    """
    rate = np.asarray(expected_rate(params, omega), dtype=float)
    slope = np.abs(np.asarray(rate_derivative(params, omega), dtype=float))
    flat = slope <= FLAT_SLOPE * params.photons_per_bin * abs(params.scale_factor)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(flat, np.inf, np.sqrt(rate) / np.where(flat, 1.0, slope))
    return float(value) if np.ndim(value) == 0 else value


def numerical_uncertainty(
    params: RateModelParams, omega: ArrayLike, draws: int = 2000, seed: int = 0
) -> ArrayLike:
    """
    Monte-Carlo ΔΩ: standard deviation of invert_rate over Poisson counts at fixed Ω.

    Each Ω is inverted on its own branch; extrema, where no branch is selected,
    give +inf like propagated_uncertainty.
    """
    if draws < 2:
        raise ValidationError(f"draws must be >= 2, got {draws}")
    _require_signal(params)
    points = np.atleast_1d(np.asarray(omega, dtype=float))
    result = np.empty(len(points))
    for i, w in enumerate(points):
        rng = seeding.derive_rng(seed, seeding.NUMERICAL_UNCERTAINTY, i)
        counts = rng.poisson(float(expected_rate(params, w)), size=draws)
        try:
            estimates, _ = invert_rate(params, counts, w)
        except AmbiguousBranchError:
            result[i] = math.inf
            continue
        result[i] = float(np.std(estimates - w, ddof=1))
    return float(result[0]) if np.ndim(omega) == 0 else result


def bias_point(params: RateModelParams) -> Tuple[float, float]:
    """
    Operating point of best precision over one fringe period.

    A 1024-point grid locates the minimum of propagated_uncertainty, and a
    golden-section search between the neighbouring grid points refines it.
    Returns (omega, precision).
    """
    _require_signal(params)
    period = fringe_period(params)
    grid = np.arange(BIAS_GRID_POINTS) * (period / BIAS_GRID_POINTS)
    values = np.nan_to_num(propagated_uncertainty(params, grid), nan=np.inf)
    best = int(np.argmin(values))
    omega, precision = float(grid[best]), float(values[best])

    def objective(w: float) -> float:
        value = propagated_uncertainty(params, w)
        return math.inf if math.isnan(value) else value

    step = period / BIAS_GRID_POINTS
    bracket = (omega - step, omega, omega + step)
    try:
        refined = optimize.minimize_scalar(
            objective, bracket=bracket, method="golden", tol=BIAS_TOLERANCE * 1e-2
        )
    except ValueError:
        # neighbours tie with the grid minimum; the grid point already is the optimum
        _logger.debug("golden refinement skipped at grid point %.9g", omega)
    else:
        if refined.fun <= precision:
            omega, precision = float(refined.x), float(refined.fun)
    _logger.debug("bias point of N=%d at %.9g rad/s: %.6g rad/s", params.photon_number, omega, precision)
    return omega, precision


def _require_positive(params: RateModelParams) -> None:
    if not params.photons_per_bin > 0:
        raise ValidationError(f"photons_per_bin must be positive, got {params.photons_per_bin}")
    if not params.scale_factor > 0:
        raise ValidationError(f"scale_factor must be positive, got {params.scale_factor}")


def sql_limit(params: RateModelParams) -> float:
    """Shot-noise limit 1/(S√M) for the detected photons per bin."""
    _require_positive(params)
    return 1.0 / (params.scale_factor * math.sqrt(params.photons_per_bin))


def heisenberg_limit(params: RateModelParams) -> float:
    """Heisenberg limit 1/(S·M)."""
    _require_positive(params)
    return 1.0 / (params.scale_factor * params.photons_per_bin)
