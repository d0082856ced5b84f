"""
Tests for fringe fitting, resampled errors and prediction bands.
"""

import math

import numpy as np
import pytest

from conftest import relative, short_sweep, wrapped_difference
from noon_gyro.errors import (
    ConvergenceError,
    IdentifiabilityError,
    RankDeficiencyError,
    ValidationError,
)
from noon_gyro.estimation.bands import band_coverage, prediction_band
from noon_gyro.estimation.fitting import FitSettings, fit_arrays, fit_rate_model, initial_guess
from noon_gyro.estimation.resampling import bootstrap_errors, monte_carlo_errors
from noon_gyro.simulation.counts import simulate_binned_counts
from noon_gyro.simulation.models import BinnedSeries


def series_from(omega, counts, tau=0.02) -> BinnedSeries:
    n = len(counts)
    return BinnedSeries(
        bin_duration=tau,
        mid_times=(np.arange(n) + 0.5) * tau,
        counts=np.asarray(counts, dtype=float),
        reference_omega=np.asarray(omega, dtype=float),
    )


class TestInitialGuess:
    @pytest.mark.parametrize("n", [1, 2])
    def test_scale_factor_within_ten_percent(self, n, experiment_n1, experiment_n2, short_profile):
        truth = experiment_n1 if n == 1 else experiment_n2
        series = simulate_binned_counts(truth, short_profile, seed=30 + n)
        guess = initial_guess(series, n)
        assert relative(guess.scale_factor, truth.scale_factor) < 0.1
        assert guess.photon_number == n
        assert 0.0 <= guess.phase_offset < 2 * math.pi / n

    def test_too_few_bins(self):
        with pytest.raises(IdentifiabilityError):
            initial_guess(series_from(np.linspace(0, 1, 7), np.ones(7)), 1)

    def test_constant_velocity(self):
        with pytest.raises(IdentifiabilityError):
            initial_guess(series_from(np.full(50, 2.0), np.arange(50)), 1)


class TestFit:
    @pytest.mark.parametrize("n", [1, 2])
    def test_noiseless_recovery(self, n, noiseless_n1, noiseless_n2, experiment_n1, experiment_n2):
        series, truth = (noiseless_n1, experiment_n1) if n == 1 else (noiseless_n2, experiment_n2)
        fit = fit_rate_model(series, n)
        assert fit.converged
        assert fit.residual_sum < 1e-8 * len(series)
        for name in ("photons_per_bin", "background_per_bin", "scale_factor"):
            assert relative(getattr(fit.params, name), getattr(truth, name)) < 1e-6
        assert wrapped_difference(fit.params.phase_offset, truth.phase_offset) < 1e-6

    def test_poisson_estimate_within_errors(self, sweep_series_n2, experiment_n2):
        fit = fit_rate_model(sweep_series_n2, 2)
        assert fit.converged
        assert fit.bins == 16_204
        assert abs(fit.params.scale_factor - experiment_n2.scale_factor) < 3 * fit.error_of("scale_factor")
        assert abs(fit.params.photons_per_bin - experiment_n2.photons_per_bin) < 3 * fit.error_of(
            "photons_per_bin"
        )
        assert all(math.isfinite(v) and v > 0 for v in fit.standard_errors.values())
        assert fit.degenerate == []

    @pytest.mark.parametrize("seed", range(4))
    def test_two_photon_phase_is_identifiable(self, seed, experiment_n2, short_profile):
        fit = fit_rate_model(simulate_binned_counts(experiment_n2, short_profile, seed=seed), 2)
        assert 0.0 <= fit.params.phase_offset < math.pi
        assert abs(fit.params.phase_offset - experiment_n2.phase_offset) < 4 * fit.error_of("phase_offset")
        assert fit.params.phase_offset == pytest.approx(1.6629, abs=0.05)

    @pytest.mark.parametrize("n", [1, 2])
    def test_converged_fits_meet_gradient_tolerance(self, n, experiment_n1, experiment_n2, short_profile):
        truth = experiment_n1 if n == 1 else experiment_n2
        settings = FitSettings()
        for seed in range(20):
            series = simulate_binned_counts(truth, short_profile, seed=seed)
            fit = fit_rate_model(series, n, settings=settings)
            assert fit.converged, (seed, fit.stop_reason, fit.gradient_norm)
            assert fit.stop_reason in ("gradient", "exact")
            if fit.stop_reason == "gradient":
                assert fit.gradient_norm <= settings.gtol

    def test_reparametrised_photon_number(self, poisson_n2):
        two = fit_rate_model(poisson_n2, 2)
        one = fit_rate_model(poisson_n2, 1)
        assert one.converged and two.converged
        assert relative(one.params.scale_factor, 2 * two.params.scale_factor) < 1e-6
        assert relative(one.params.photons_per_bin, two.params.photons_per_bin / 2) < 1e-6
        assert relative(one.params.background_per_bin, two.params.background_per_bin) < 1e-6
        assert wrapped_difference(one.params.phase_offset, 2 * two.params.phase_offset) < 1e-6
        assert relative(one.error_of("scale_factor"), 2 * two.error_of("scale_factor")) < 1e-4
        assert one.residual_sum == pytest.approx(two.residual_sum, rel=1e-9)

    def test_init_takes_fit_photon_number(self, poisson_n2, experiment_n2):
        fit = fit_rate_model(poisson_n2, 2, init=experiment_n2.with_updates(photon_number=1))
        assert fit.photon_number == 2

    def test_all_zero_counts_are_degenerate(self, short_profile, experiment_n1):
        series = simulate_binned_counts(
            experiment_n1.with_updates(photons_per_bin=0.0, background_per_bin=0.0), short_profile, seed=1
        )
        fit = fit_rate_model(series, 1)
        assert fit.params.photons_per_bin == 0.0
        assert set(fit.degenerate) == {"scale_factor", "phase_offset"}
        assert math.isinf(fit.error_of("scale_factor"))
        assert math.isfinite(fit.error_of("background_per_bin"))

    def test_constant_velocity_with_init_is_rank_deficient(self, experiment_n1):
        omega = np.full(200, 1.0)
        counts = np.random.default_rng(3).poisson(900.0, 200).astype(float)
        with pytest.raises(RankDeficiencyError) as info:
            fit_rate_model(series_from(omega, counts, tau=5e-3), 1, init=experiment_n1)
        assert info.value.direction

    def test_iteration_cap(self, poisson_n2, experiment_n2):
        start = experiment_n2.with_updates(scale_factor=experiment_n2.scale_factor * 1.02, phase_offset=0.3)
        fit = fit_rate_model(poisson_n2, 2, init=start, settings=FitSettings(max_iterations=1))
        assert not fit.converged
        assert fit.stop_reason == "max_iterations"
        assert fit.iterations == 1

    def test_uniform_weighting(self, poisson_n2, experiment_n2):
        poisson = fit_rate_model(poisson_n2, 2)
        uniform = fit_rate_model(poisson_n2, 2, settings=FitSettings(weighting="uniform"))
        assert uniform.converged and uniform.weighting == "uniform"
        assert abs(uniform.params.scale_factor - experiment_n2.scale_factor) < 4 * uniform.error_of(
            "scale_factor"
        )
        ratio = uniform.error_of("scale_factor") / poisson.error_of("scale_factor")
        assert 0.5 < ratio < 2.0

    def test_fit_arrays_matches_series_fit(self, poisson_n1):
        a = fit_rate_model(poisson_n1, 1)
        b = fit_arrays(poisson_n1.reference_omega, poisson_n1.counts, 1, poisson_n1.bin_duration)
        assert a.params == b.params

    def test_invalid_requests(self, poisson_n1):
        with pytest.raises(IdentifiabilityError):
            fit_rate_model(poisson_n1, 0)
        with pytest.raises(ValueError):
            FitSettings(unknown=1)

    def test_covariance_is_symmetric(self, poisson_n1):
        cov = np.array(fit_rate_model(poisson_n1, 1).covariance)
        assert np.allclose(cov, cov.T)
        assert np.all(np.diag(cov) > 0)


class TestBands:
    def test_coverage(self, poisson_n1):
        fit = fit_rate_model(poisson_n1, 1)
        assert 0.98 <= band_coverage(poisson_n1, fit.params, 0.99) <= 1.0

    def test_band_contains_mean(self, experiment_n2):
        omega = np.linspace(0, 5, 40)
        low, high = prediction_band(experiment_n2, omega)
        assert np.all(low <= high)
        assert np.all(low >= 0)

    def test_invalid_level(self, experiment_n2):
        with pytest.raises(ValidationError):
            prediction_band(experiment_n2, [1.0], level=1.0)

    def test_empty_series(self, experiment_n2):
        empty = BinnedSeries(0.02, np.empty(0), np.empty(0), np.empty(0))
        with pytest.raises(ValidationError):
            band_coverage(empty, experiment_n2)


class TestResampling:
    @pytest.fixture
    def base_fit(self, poisson_n2):
        return fit_rate_model(poisson_n2, 2)

    def test_bootstrap_tracks_covariance_errors(self, poisson_n2, base_fit):
        spread = bootstrap_errors(poisson_n2, 2, 100, seed=5, base_fit=base_fit)
        assert spread.method == "bootstrap"
        assert spread.replicates + spread.failures == 100
        for name in ("photons_per_bin", "scale_factor", "phase_offset"):
            ratio = spread[name] / base_fit.error_of(name)
            assert 1 / 1.5 < ratio < 1.5

    def test_bootstrap_is_deterministic(self, poisson_n2, base_fit):
        a = bootstrap_errors(poisson_n2, 2, 100, seed=6, base_fit=base_fit)
        b = bootstrap_errors(poisson_n2, 2, 100, seed=6, base_fit=base_fit, workers=2)
        assert a.std == b.std

    def test_bootstrap_requires_replicates(self, poisson_n2):
        with pytest.raises(ValidationError):
            bootstrap_errors(poisson_n2, 2, 99, seed=1)

    def test_bootstrap_requires_converged_base(self, poisson_n2, base_fit):
        stalled = base_fit.model_copy(update={"converged": False})
        with pytest.raises(ConvergenceError):
            bootstrap_errors(poisson_n2, 2, 100, seed=1, base_fit=stalled)

    def test_monte_carlo_agrees_with_bootstrap(self, experiment_n2, poisson_n2, base_fit):
        profile = short_sweep()
        mc = monte_carlo_errors(experiment_n2, profile, 100, seed=7)
        boot = bootstrap_errors(poisson_n2, 2, 100, seed=8, base_fit=base_fit)
        assert mc.method == "monte_carlo"
        for name in ("photons_per_bin", "scale_factor"):
            assert 0.5 < mc[name] / boot[name] < 2.0

    def test_monte_carlo_matches_fisher_errors(self, experiment_n2, base_fit):
        mc = monte_carlo_errors(experiment_n2, short_sweep(), 100, seed=9, workers=2)
        ratio = mc["scale_factor"] / base_fit.error_of("scale_factor")
        assert 1 / 1.5 < ratio < 1.5

    def test_noiseless_bootstrap_has_no_spread(self, noiseless_n2, experiment_n2):
        spread = bootstrap_errors(noiseless_n2, 2, 100, seed=4)
        assert spread.failures == 0
        assert spread["scale_factor"] < 1e-3 * experiment_n2.scale_factor
        assert spread["phase_offset"] < 1e-3

    def test_monte_carlo_spread_shrinks_with_photon_number(self, experiment_n2):
        profile = short_sweep(dwell=1.0)
        low = experiment_n2.with_updates(photons_per_bin=1e4, background_per_bin=250.0)
        high = experiment_n2.with_updates(photons_per_bin=1e6, background_per_bin=25_000.0)
        spread_low = monte_carlo_errors(low, profile, 100, seed=21)
        spread_high = monte_carlo_errors(high, profile, 100, seed=22)
        # a hundredfold photon budget narrows the spread tenfold
        ratio = spread_high["scale_factor"] / spread_low["scale_factor"]
        assert 0.07 < ratio < 0.14

    def test_monte_carlo_requires_trials(self, experiment_n2):
        with pytest.raises(ValidationError):
            monte_carlo_errors(experiment_n2, short_sweep(), 10, seed=1)
