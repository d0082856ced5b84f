"""
Sampling spread of fitted parameters by bootstrap and Monte-Carlo refits.

Each resample or trial draws from its own sub-seed, so the result does not
depend on how tasks are scheduled across worker threads.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from noon_gyro.errors import ConvergenceError, EstimationError, ResamplingError, ValidationError
from noon_gyro.estimation.fitting import PARAMETERS, FitResult, FitSettings, fit_arrays, fit_rate_model
from noon_gyro.physics.models import TWO_PI, RateModelParams
from noon_gyro.simulation import seeding
from noon_gyro.simulation.counts import simulate_binned_counts
from noon_gyro.simulation.models import BinnedSeries, RotationProfile

_logger = logging.getLogger(__name__)

MIN_REPLICATES = 100
MAX_FAILURE_FRACTION = 0.05


class ParameterSpread(BaseModel):
    """Per-parameter standard deviation over replicate fits."""

    model_config = ConfigDict(frozen=True)

    method: str
    std: Dict[str, float]
    replicates: int
    failures: int

    def __getitem__(self, name: str) -> float:
        return self.std[name]


def _vector(params: RateModelParams) -> np.ndarray:
    return np.array([getattr(params, name) for name in PARAMETERS])


def _wrapped(phases: np.ndarray, center: float, period: float = TWO_PI) -> np.ndarray:
    """Phases unwrapped around center into (center − period/2, center + period/2]."""
    half = 0.5 * period
    return center - np.remainder(center - phases + half, period) + half


def _run(tasks: int, job: Callable[[int], Optional[FitResult]], workers: int) -> List[Optional[FitResult]]:
    if workers <= 1:
        return [job(i) for i in range(tasks)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        # map keeps submission order
        return list(executor.map(job, range(tasks)))


def _spread(
    method: str, results: List[Optional[FitResult]], center: RateModelParams
) -> ParameterSpread:
    total = len(results)
    good = [r for r in results if r is not None]
    failures = total - len(good)
    if failures > MAX_FAILURE_FRACTION * total:
        raise ResamplingError(
            f"{method}: {failures} of {total} refits failed", failures=failures, total=total
        )
    if failures:
        _logger.warning("%s: %d of %d refits failed and were excluded", method, failures, total)
    if len(good) < 2:
        raise ResamplingError(f"{method}: fewer than two successful refits", failures, total)

    values = np.array([_vector(r.params) for r in good])
    phase_col = PARAMETERS.index("phase_offset")
    values[:, phase_col] = _wrapped(
        values[:, phase_col], center.phase_offset, TWO_PI / center.photon_number
    )
    std = values.std(axis=0, ddof=1)
    return ParameterSpread(
        method=method,
        std={name: float(s) for name, s in zip(PARAMETERS, std)},
        replicates=len(good),
        failures=failures,
    )


def _guarded(fit: Callable[[], FitResult], label: str) -> Optional[FitResult]:
    try:
        result = fit()
    except (EstimationError, np.linalg.LinAlgError) as exc:
        _logger.debug("%s failed: %s", label, exc)
        return None
    return result if result.converged else None


def bootstrap_errors(
    series: BinnedSeries,
    photon_number: int,
    resamples: int,
    seed: int,
    settings: Optional[FitSettings] = None,
    workers: int = 1,
    base_fit: Optional[FitResult] = None,
) -> ParameterSpread:
    """
    Nonparametric bootstrap over bins.

    Every resample draws len(series) bins with replacement and is refit from the
    full-data estimate. Unconverged or failed refits are counted; more than 5%
    of them raises ResamplingError.
    """
    if resamples < MIN_REPLICATES:
        raise ValidationError(f"resamples must be >= {MIN_REPLICATES}, got {resamples}")
    if base_fit is None:
        base_fit = fit_rate_model(series, photon_number, settings=settings)
    if not base_fit.converged:
        raise ConvergenceError("full-data fit did not converge; cannot bootstrap around it")

    omega, counts, n = series.reference_omega, series.counts, len(series)

    def job(i: int) -> Optional[FitResult]:
        rng = seeding.derive_rng(seed, seeding.BOOTSTRAP, i)
        idx = rng.integers(0, n, size=n)
        return _guarded(
            lambda: fit_arrays(
                omega[idx],
                counts[idx],
                photon_number,
                series.bin_duration,
                init=base_fit.params,
                settings=settings,
            ),
            f"bootstrap resample {i}",
        )

    spread = _spread("bootstrap", _run(resamples, job, workers), base_fit.params)
    _logger.info("bootstrap over %d resamples: %s", resamples, spread.std)
    return spread


def monte_carlo_errors(
    truth: RateModelParams,
    profile: RotationProfile,
    trials: int,
    seed: int,
    settings: Optional[FitSettings] = None,
    workers: int = 1,
) -> ParameterSpread:
    """Spread of fits over fresh simulations of the same design, each started at truth."""
    if trials < MIN_REPLICATES:
        raise ValidationError(f"trials must be >= {MIN_REPLICATES}, got {trials}")

    def job(i: int) -> Optional[FitResult]:
        series = simulate_binned_counts(
            truth, profile, seeding.derive_seed(seed, seeding.MONTE_CARLO, i)
        )
        return _guarded(
            lambda: fit_rate_model(series, truth.photon_number, init=truth, settings=settings),
            f"Monte-Carlo trial {i}",
        )

    spread = _spread("monte_carlo", _run(trials, job, workers), truth)
    _logger.info("Monte Carlo over %d trials: %s", trials, spread.std)
    return spread
