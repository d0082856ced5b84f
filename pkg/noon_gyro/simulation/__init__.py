from .models import BinnedSeries, RotationProfile, SourceModel
from .rotation import (
    experiment_sweep_profile,
    profile_velocity,
    rotation_angle,
    step_target,
    truncated_profile,
)
from .counts import accidental_rate, bin_count, simulate_binned_counts, simulate_expected_counts
from .tags import simulate_time_tags

__all__ = [
    "BinnedSeries",
    "RotationProfile",
    "SourceModel",
    "profile_velocity",
    "rotation_angle",
    "step_target",
    "experiment_sweep_profile",
    "truncated_profile",
    "accidental_rate",
    "bin_count",
    "simulate_binned_counts",
    "simulate_expected_counts",
    "simulate_time_tags",
]
