"""
Shared fixtures: experiment parameter rows, sweep designs and seeded series.
"""

import math

import pytest

from noon_gyro.estimation.fitting import PARAMETERS, FitResult
from noon_gyro.physics.models import EXPERIMENT_N1, EXPERIMENT_N2, RateModelParams
from noon_gyro.simulation.counts import simulate_binned_counts, simulate_expected_counts
from noon_gyro.simulation.models import RotationProfile
from noon_gyro.simulation.rotation import experiment_sweep_profile


def short_sweep(dwell: float = 2.0, wobble: float = 0.05) -> RotationProfile:
    """Same 17 velocity steps as the experiment, with shorter dwells."""
    return RotationProfile.staircase(0.0, 5.6, 17, dwell, wobble_relative_amplitude=wobble)


def make_fit(params: RateModelParams, error: float = 1e-4, converged: bool = True) -> FitResult:
    return FitResult(
        params=params,
        standard_errors={name: error for name in PARAMETERS},
        residual_sum=0.0,
        iterations=1,
        converged=converged,
        gradient_norm=0.0,
        bins=1,
    )


# --- Fixtures ---


@pytest.fixture
def experiment_n1() -> RateModelParams:
    return EXPERIMENT_N1


@pytest.fixture
def experiment_n2() -> RateModelParams:
    return EXPERIMENT_N2


@pytest.fixture
def sweep_n1() -> RotationProfile:
    return experiment_sweep_profile(1)


@pytest.fixture
def sweep_n2() -> RotationProfile:
    return experiment_sweep_profile(2)


@pytest.fixture
def short_profile() -> RotationProfile:
    return short_sweep()


@pytest.fixture
def noiseless_n1(experiment_n1, short_profile):
    return simulate_expected_counts(experiment_n1, short_profile)


@pytest.fixture
def noiseless_n2(experiment_n2, short_profile):
    return simulate_expected_counts(experiment_n2, short_profile)


@pytest.fixture
def poisson_n1(experiment_n1, short_profile):
    return simulate_binned_counts(experiment_n1, short_profile, seed=11)


@pytest.fixture
def poisson_n2(experiment_n2, short_profile):
    return simulate_binned_counts(experiment_n2, short_profile, seed=12)


@pytest.fixture
def sweep_series_n1(experiment_n1, sweep_n1):
    return simulate_binned_counts(experiment_n1, sweep_n1, seed=2024)


@pytest.fixture
def sweep_series_n2(experiment_n2, sweep_n2):
    return simulate_binned_counts(experiment_n2, sweep_n2, seed=2025)


def relative(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else abs(a)


def wrapped_difference(a: float, b: float, period: float = 2 * math.pi) -> float:
    return abs(math.remainder(a - b, period))
