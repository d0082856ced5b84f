"""
Closed-form physics of the NOON-state Sagnac gyroscope.

Rotation at Ω shifts the relative phase of the counter-propagating modes by
S_T·Ω. An N-photon NOON state picks up N times that phase, so its detection
probability oscillates N times faster than a single photon's. All functions
accept scalars or numpy arrays for Ω and return the same shape.
"""

import math
from typing import Union

import numpy as np

from noon_gyro.errors import ValidationError
from noon_gyro.physics.models import (
    TWO_PI,
    InterferometerGeometry,
    RateModelParams,
    SensitivityLimits,
)

ArrayLike = Union[float, np.ndarray]


def sagnac_scale_factor(geom: InterferometerGeometry) -> float:
    """S_T = 4πLr/(λc), in seconds."""
    return 4.0 * math.pi * geom.fiber_length * geom.coil_radius / (
        geom.wavelength * geom.light_speed
    )


def sagnac_phase(geom: InterferometerGeometry, omega: ArrayLike) -> ArrayLike:
    """Sagnac phase S_T·Ω in radians; odd in Ω."""
    return sagnac_scale_factor(geom) * omega


def sagnac_time_delay(geom: InterferometerGeometry, omega: ArrayLike) -> ArrayLike:
    """Propagation-time difference Δt = 2LrΩ/c² between the two senses, so that φ = 2πcΔt/λ."""
    return 2.0 * geom.fiber_length * geom.coil_radius * omega / geom.light_speed**2


def detection_probability(photon_number: int, total_phase: ArrayLike) -> ArrayLike:
    """cos²(N·φ/2): probability of the bright output for an N-photon state."""
    if photon_number < 1:
        raise ValidationError(f"photon_number must be >= 1, got {photon_number}")
    return np.cos(0.5 * photon_number * np.asarray(total_phase, dtype=float)) ** 2


def expected_rate(params: RateModelParams, omega: ArrayLike) -> ArrayLike:
    """Expected events per bin, M/N·cos²(N/2·(SΩ+φ0)) + B."""
    n = params.photon_number
    phase = params.scale_factor * np.asarray(omega, dtype=float) + params.phase_offset
    rate = params.amplitude * np.cos(0.5 * n * phase) ** 2 + params.background_per_bin
    return rate + _zero_like(omega)


def rate_derivative(params: RateModelParams, omega: ArrayLike) -> ArrayLike:
    """∂R_N/∂Ω = −(M·S/2)·sin(N(SΩ+φ0))."""
    n = params.photon_number
    phase = params.scale_factor * np.asarray(omega, dtype=float) + params.phase_offset
    slope = -0.5 * params.photons_per_bin * params.scale_factor * np.sin(n * phase)
    return slope + _zero_like(omega)


def fringe_frequency(params: RateModelParams) -> float:
    """ω_N = S·N/2, the angular frequency of the cos² argument per unit Ω."""
    return 0.5 * params.scale_factor * params.photon_number


def fringe_period(params: RateModelParams) -> float:
    """Period of expected_rate in Ω, 2π/(N·S)."""
    if params.scale_factor == 0:
        raise ValidationError("scale_factor is zero; the fringe has no period")
    return TWO_PI / abs(params.photon_number * params.scale_factor)


def phase_sensitivity_limits(photons: float, photon_number: int) -> SensitivityLimits:
    """
    Phase uncertainty for M detected photons.

    sql = 1/√M for consecutive single photons, noon = 1/√(N·M) for M/N NOON
    states, heisenberg = 1/M.
    """
    if not photons > 0:
        raise ValidationError(f"photon budget must be positive, got {photons}")
    if photon_number < 1:
        raise ValidationError(f"photon_number must be >= 1, got {photon_number}")
    if photon_number > photons:
        raise ValidationError(
            f"a budget of {photons} photons cannot hold one {photon_number}-photon state"
        )
    return SensitivityLimits(
        sql=1.0 / math.sqrt(photons),
        noon=1.0 / math.sqrt(photon_number * photons),
        heisenberg=1.0 / photons,
    )


def _zero_like(value: ArrayLike) -> ArrayLike:
    # keeps python floats as floats and arrays as arrays
    if np.ndim(value) == 0:
        return 0.0
    return np.zeros(np.shape(value))
