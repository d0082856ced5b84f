"""
Rate-level simulation: one Poisson count per integration window.
"""

import logging
from typing import Optional

import numpy as np

from noon_gyro.errors import ValidationError
from noon_gyro.physics.models import RateModelParams
from noon_gyro.physics.sagnac import expected_rate
from noon_gyro.simulation import seeding
from noon_gyro.simulation.models import BinnedSeries, RotationProfile
from noon_gyro.simulation.rotation import profile_velocity, step_target

_logger = logging.getLogger(__name__)


def bin_count(span: float, bin_duration: float) -> int:
    """Number of whole bins in span; rejects spans that are not a multiple of the bin."""
    if not bin_duration > 0:
        raise ValidationError(f"bin duration must be positive, got {bin_duration}")
    if not span > 0:
        raise ValidationError(f"span must be positive, got {span}")
    n = int(round(span / bin_duration))
    if n < 1 or abs(n * bin_duration - span) > 1e-9 * span:
        raise ValidationError(
            f"span {span} s is not an integer multiple of the bin duration {bin_duration} s"
        )
    return n


def _bin_grid(params: RateModelParams, profile: RotationProfile):
    tau = params.bin_duration
    n = bin_count(profile.total_duration, tau)
    mid_times = (np.arange(n) + 0.5) * tau
    return mid_times, profile_velocity(profile, mid_times), step_target(profile, mid_times)


def simulate_binned_counts(
    params: RateModelParams,
    profile: RotationProfile,
    seed: int,
    metadata: Optional[dict] = None,
) -> BinnedSeries:
    """
    Poisson counts per bin with mean expected_rate at the bin's mid-time velocity.

    The same (params, profile, seed) always yields the same series.
    """
    mid_times, omega, target = _bin_grid(params, profile)
    rng = seeding.derive_rng(seed, seeding.BINNED_COUNTS)
    counts = rng.poisson(expected_rate(params, omega)).astype(float)
    _logger.info(
        "simulated %d bins of %.3g s for N=%d (seed %d, %d events)",
        len(counts), params.bin_duration, params.photon_number, seed, int(counts.sum()),
    )
    info = {"photon_number": params.photon_number, "seed": seed}
    info.update(metadata or {})
    return BinnedSeries(
        bin_duration=params.bin_duration,
        mid_times=mid_times,
        counts=counts,
        reference_omega=omega,
        target_omega=target,
        metadata=info,
    )


def simulate_expected_counts(params: RateModelParams, profile: RotationProfile) -> BinnedSeries:
    """Noiseless series whose counts equal the expected rates."""
    mid_times, omega, target = _bin_grid(params, profile)
    return BinnedSeries(
        bin_duration=params.bin_duration,
        mid_times=mid_times,
        counts=expected_rate(params, omega),
        reference_omega=omega,
        target_omega=target,
        metadata={"photon_number": params.photon_number},
    )


def accidental_rate(rate1: float, rate2: float, window: float) -> float:
    """Accidental coincidences per second between two uncorrelated streams, r1·r2·2w."""
    if rate1 < 0 or rate2 < 0 or window < 0:
        raise ValidationError("rates and window must be nonnegative")
    return rate1 * rate2 * 2.0 * window
