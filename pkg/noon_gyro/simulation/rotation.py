"""
Angular velocity of the rotating platform over time.

The platform steps through constant target velocities. An imbalanced bearing
modulates the speed once per turn, modelled as Ω_step·(1 + a·sin(θ + ψ)) with θ
the accumulated rotation angle of the step staircase.
"""

from typing import Union

import numpy as np

from noon_gyro.errors import ProfileRangeError
from noon_gyro.simulation.models import RotationProfile

ArrayLike = Union[float, np.ndarray]

# Seventeen steps of 0.35 rad/s from rest to 5.6 rad/s, about 19 s each.
SWEEP_START = 0.0
SWEEP_STOP = 5.6
SWEEP_STEPS = 17
SWEEP_DWELL = 19.0
# Last-step dwell per photon number, so the runs hold 64,688 and 16,204 bins.
SWEEP_LAST_DWELL = {1: 19.44, 2: 20.08}


def _step_index(profile: RotationProfile, t: ArrayLike) -> np.ndarray:
    times = np.asarray(t, dtype=float)
    total = profile.total_duration
    if np.any(~np.isfinite(times)) or np.any(times < 0) or np.any(times >= total):
        raise ProfileRangeError(f"time outside profile duration [0, {total})")
    boundaries = profile.boundaries
    index = np.searchsorted(boundaries, times, side="right") - 1
    return np.clip(index, 0, len(profile.steps) - 1)


def step_target(profile: RotationProfile, t: ArrayLike) -> ArrayLike:
    """Target velocity of the step active at time t."""
    index = _step_index(profile, t)
    result = profile.targets[index]
    return float(result) if np.ndim(t) == 0 else result


def rotation_angle(profile: RotationProfile, t: ArrayLike) -> ArrayLike:
    """Accumulated angle ∫Ω_step dt of the step staircase."""
    index = _step_index(profile, t)
    targets = profile.targets
    starts = profile.boundaries[:-1]
    angle_at_start = np.concatenate([[0.0], np.cumsum(targets * profile.durations)[:-1]])
    result = angle_at_start[index] + targets[index] * (np.asarray(t, dtype=float) - starts[index])
    return float(result) if np.ndim(t) == 0 else result


def profile_velocity(profile: RotationProfile, t: ArrayLike) -> ArrayLike:
    """Instantaneous angular velocity Ω(t) in rad/s."""
    target = step_target(profile, t)
    if profile.wobble_relative_amplitude == 0:
        return target
    theta = rotation_angle(profile, t)
    wobble = profile.wobble_relative_amplitude * np.sin(theta + profile.wobble_phase)
    result = target * (1.0 + wobble)
    return float(result) if np.ndim(t) == 0 else result


def experiment_sweep_profile(
    photon_number: int,
    wobble_relative_amplitude: float = 0.05,
) -> RotationProfile:
    """Default sweep of the one-photon (N=1) or two-photon (N=2) run."""
    last_dwell = SWEEP_LAST_DWELL.get(photon_number, SWEEP_DWELL)
    return RotationProfile.staircase(
        SWEEP_START,
        SWEEP_STOP,
        SWEEP_STEPS,
        SWEEP_DWELL,
        last_dwell=last_dwell,
        wobble_relative_amplitude=wobble_relative_amplitude,
    )


def truncated_profile(profile: RotationProfile, span: float) -> RotationProfile:
    """The first span seconds of profile; steps past span are dropped."""
    if not 0 < span <= profile.total_duration * (1 + 1e-12):
        raise ProfileRangeError(
            f"span {span} s must be positive and within the profile's {profile.total_duration} s"
        )
    steps = []
    elapsed = 0.0
    for omega, duration in profile.steps:
        take = min(duration, span - elapsed)
        if take <= 0:
            break
        steps.append((omega, take))
        elapsed += take
    return profile.model_copy(update={"steps": steps})
