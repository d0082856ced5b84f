"""
Fringe-model fitting.

Fits R_N(Ω) = M/N·cos²(N/2·(SΩ+φ0)) + B to a binned series by damped least
squares. The objective is Σ(count − R)²/max(R, 1) with Poisson weights, or the
plain sum of squares with uniform weights. Steps use the exact gradient of the
objective and Gauss-Newton curvature; the damping follows the classic
Levenberg-Marquardt schedule (×10 after a rejected step, ÷10 after an accepted
one). The phase is optimised unconstrained and wrapped into [0, 2π/N) on
output, one period of the model in φ0.
"""

import logging
import math
from typing import Dict, List, Literal, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from noon_gyro.errors import IdentifiabilityError, RankDeficiencyError
from noon_gyro.physics.models import TWO_PI, RateModelParams
from noon_gyro.simulation.models import BinnedSeries

_logger = logging.getLogger(__name__)

PARAMETERS = ("photons_per_bin", "background_per_bin", "scale_factor", "phase_offset")

MIN_BINS = 8
PHASE_GRID_POINTS = 64
FREQUENCY_GRID_POINTS = 2048
# a fit whose residual is this small relative to the data is exact
EXACT_FIT_RATIO = 1e-20
# relative rounding of χ² summed over a long series
CHI2_ROUNDING = 1e-12
CONVERGED_REASONS = ("gradient", "exact")


class FitSettings(BaseModel):
    """Damping schedule and stopping rules of the fitter."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    weighting: Literal["poisson", "uniform"] = "poisson"
    initial_damping: float = Field(1e-3, gt=0.0)
    damping_increase: float = Field(10.0, gt=1.0)
    damping_decrease: float = Field(10.0, gt=1.0)
    max_damping: float = Field(1e12, gt=0.0)
    gtol: float = Field(1e-10, gt=0.0)
    xtol: float = Field(1e-12, gt=0.0)
    max_iterations: int = Field(200, ge=1)


class FitResult(BaseModel):
    """Fitted fringe parameters with covariance-derived standard errors."""

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    params: RateModelParams
    standard_errors: Dict[str, float]
    residual_sum: float
    iterations: int
    converged: bool
    gradient_norm: float
    # gradient | exact | step | stalled | max_iterations
    stop_reason: str = "gradient"
    bins: int
    weighting: str = "poisson"
    degenerate: List[str] = Field(default_factory=list)
    covariance: Optional[List[List[float]]] = None

    @property
    def photon_number(self) -> int:
        return self.params.photon_number

    def error_of(self, name: str) -> float:
        return self.standard_errors[name]


# --- Model evaluation ---


def _model(p: np.ndarray, omega: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rates and Jacobian (rows: bins, columns: M, B, S, φ)."""
    m, b, s, phi = p
    x = s * omega + phi
    cos_sq = np.cos(0.5 * n * x) ** 2
    rate = (m / n) * cos_sq + b
    slope = -0.5 * m * np.sin(n * x)
    jac = np.empty((len(omega), 4))
    jac[:, 0] = cos_sq / n
    jac[:, 1] = 1.0
    jac[:, 2] = slope * omega
    jac[:, 3] = slope
    return rate, jac


def _objective(
    counts: np.ndarray, rate: np.ndarray, poisson: bool
) -> Tuple[float, np.ndarray, np.ndarray]:
    """χ², dχ²/dR per bin, and the curvature weights 1/den."""
    resid = counts - rate
    if poisson:
        den = np.maximum(rate, 1.0)
        chi2 = float(np.sum(resid**2 / den))
        d_chi2 = -2.0 * resid / den - np.where(rate > 1.0, resid**2 / den**2, 0.0)
        return chi2, d_chi2, 1.0 / den
    return float(np.sum(resid**2)), -2.0 * resid, np.ones_like(rate)


def _project(p: np.ndarray) -> np.ndarray:
    p = p.copy()
    p[0] = max(p[0], 0.0)
    p[1] = max(p[1], 0.0)
    return p


def _gradient_measure(grad: np.ndarray, hess: np.ndarray, chi2: float, active) -> float:
    """Largest cosine between the weighted residual and a Jacobian column."""
    if chi2 <= 0:
        return 0.0
    diag = np.diag(hess)[active]
    scale = np.sqrt(np.maximum(diag, 1e-300) * 0.5 * chi2)
    return float(np.max(0.5 * np.abs(grad[active]) / scale)) if len(diag) else 0.0


def _active_columns(jac: np.ndarray, weights: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(jac**2 * weights[:, None], axis=0))
    return norms > 1e-14 * max(float(norms.max()), 1e-300)


class _State(NamedTuple):
    chi2: float
    grad: np.ndarray
    hess: np.ndarray
    active: np.ndarray
    measure: float


def _evaluate(p: np.ndarray, omega: np.ndarray, counts: np.ndarray, n: int, poisson: bool) -> _State:
    rate, jac = _model(p, omega, n)
    chi2, d_chi2, weights = _objective(counts, rate, poisson)
    grad = jac.T @ d_chi2
    hess = 2.0 * (jac * weights[:, None]).T @ jac
    active = _active_columns(jac, weights)
    return _State(chi2, grad, hess, active, _gradient_measure(grad, hess, chi2, active))


def _improves(trial: _State, current: _State) -> bool:
    """Lower χ², or a smaller gradient where χ² is flat to rounding."""
    if trial.chi2 < current.chi2:
        return True
    return trial.chi2 <= current.chi2 * (1.0 + CHI2_ROUNDING) and trial.measure < current.measure


# --- Initial guess ---


def _cell_means(omega: np.ndarray, counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Average counts on a uniform Ω grid; empty cells are dropped."""
    cells = int(min(256, max(16, len(omega) // 4)))
    edges = np.linspace(omega.min(), omega.max(), cells + 1)
    index = np.clip(np.searchsorted(edges, omega, side="right") - 1, 0, cells - 1)
    filled = np.bincount(index, minlength=cells)
    sums = np.bincount(index, weights=counts, minlength=cells)
    keep = filled > 0
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers[keep], sums[keep] / filled[keep]


def _dominant_frequency(grid_omega: np.ndarray, values: np.ndarray) -> float:
    """
    Angular frequency (per rad/s) of the strongest sinusoid in values(Ω).

    A least-squares periodogram with a free offset: for each trial frequency
    the data are regressed on (1, cos kΩ, sin kΩ), and the explained fraction
    of variance is the power. The peak is refined by parabolic interpolation.
    """
    span = float(grid_omega.max() - grid_omega.min())
    gaps = np.diff(np.sort(grid_omega))
    k_min = math.pi / span
    k_max = max(math.pi / float(gaps.max()), 4.0 * k_min) if len(gaps) else 4.0 * k_min
    k = np.linspace(k_min, k_max, FREQUENCY_GRID_POINTS)

    centered = values - values.mean()
    tss = float(np.sum(centered**2))
    if tss == 0:
        return float(k[0])
    arg = np.outer(k, grid_omega)
    basis = np.stack([np.ones_like(arg), np.cos(arg), np.sin(arg)], axis=-1)
    normal = np.einsum("fni,fnj->fij", basis, basis)
    rhs = np.einsum("fni,n->fi", basis, values)
    # tiny ridge keeps near-degenerate low frequencies solvable
    normal += 1e-12 * np.trace(normal, axis1=1, axis2=2)[:, None, None] * np.eye(3)
    coef = np.linalg.solve(normal, rhs[..., None])[..., 0]
    fitted = np.einsum("fni,fi->fn", basis, coef)
    power = 1.0 - np.sum((values - fitted) ** 2, axis=1) / tss

    best = int(np.argmax(power))
    if 0 < best < len(k) - 1:
        left, mid, right = power[best - 1 : best + 2]
        curvature = left - 2.0 * mid + right
        if curvature < 0:
            shift = 0.5 * (left - right) / curvature
            return float(k[best] + shift * (k[1] - k[0]))
    return float(k[best])


def initial_guess(series: BinnedSeries, photon_number: int) -> RateModelParams:
    """
    Starting point for the fit.

    B₀ is the smallest count and M₀ = N·(max − min). S₀ comes from the dominant
    frequency of counts against Ω (the cos² fringe oscillates at N·S per rad/s),
    and φ0 from a 64-point grid search over [0, 2π/N) at fixed M₀, B₀, S₀.
    """
    return _initial_guess_arrays(
        series.reference_omega, series.counts, photon_number, series.bin_duration
    )


def _initial_guess_arrays(
    omega: np.ndarray, counts: np.ndarray, photon_number: int, bin_duration: float
) -> RateModelParams:
    if len(counts) < MIN_BINS:
        raise IdentifiabilityError(
            f"need at least {MIN_BINS} bins to fit the fringe model, got {len(counts)}"
        )
    if float(np.ptp(omega)) <= 1e-12 * max(float(np.max(np.abs(omega))), 1.0):
        raise IdentifiabilityError("angular velocity is constant; S and φ0 are not separable")

    n = photon_number
    low, high = float(counts.min()), float(counts.max())
    m0, b0 = n * (high - low), low
    grid_omega, values = _cell_means(omega, counts)
    s0 = _dominant_frequency(grid_omega, values) / n

    phases = np.arange(PHASE_GRID_POINTS) * (TWO_PI / (n * PHASE_GRID_POINTS))
    rates = (m0 / n) * np.cos(0.5 * n * (s0 * omega[None, :] + phases[:, None])) ** 2 + b0
    residual = np.sum((counts[None, :] - rates) ** 2, axis=1)
    phi0 = float(phases[int(np.argmin(residual))])

    guess = RateModelParams(
        photon_number=n,
        photons_per_bin=m0,
        background_per_bin=b0,
        scale_factor=s0,
        phase_offset=phi0,
        bin_duration=bin_duration,
    )
    _logger.debug("initial guess %s", guess)
    return guess


# --- Fitting ---


def _covariance(
    hess: np.ndarray, active: np.ndarray
) -> np.ndarray:
    """Inverse of the weighted normal matrix J^T W J over the active parameters."""
    normal = 0.5 * hess[np.ix_(active, active)]
    scale = np.sqrt(np.diag(normal))
    correlation = normal / np.outer(scale, scale)
    eigvals, eigvecs = np.linalg.eigh(correlation)
    if eigvals[0] <= 1e-12 * eigvals[-1]:
        names = [name for name, on in zip(PARAMETERS, active) if on]
        vector = eigvecs[:, 0]
        direction = [names[i] for i in np.argsort(-np.abs(vector)) if abs(vector[i]) > 0.3]
        raise RankDeficiencyError(
            f"normal matrix is singular along {' + '.join(direction)}", direction=direction
        )
    inv_corr = (eigvecs / eigvals) @ eigvecs.T
    return inv_corr / np.outer(scale, scale)


def fit_arrays(
    omega: np.ndarray,
    counts: np.ndarray,
    photon_number: int,
    bin_duration: float,
    init: Optional[RateModelParams] = None,
    settings: Optional[FitSettings] = None,
) -> FitResult:
    """Fit the fringe model to paired (Ω, count) samples."""
    settings = settings or FitSettings()
    omega = np.asarray(omega, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if init is None:
        init = _initial_guess_arrays(omega, counts, photon_number, bin_duration)
    n = photon_number
    poisson = settings.weighting == "poisson"

    p = np.array(
        [init.photons_per_bin, init.background_per_bin, init.scale_factor, init.phase_offset]
    )
    data_norm = float(np.sum(counts**2 / np.maximum(counts, 1.0))) if poisson else float(
        np.sum(counts**2)
    )

    def finished(state: _State) -> Optional[str]:
        if state.chi2 == 0.0 or state.chi2 <= EXACT_FIT_RATIO * data_norm:
            return "exact"
        if state.measure <= settings.gtol:
            return "gradient"
        return None

    lam = settings.initial_damping
    iterations = 0
    state = _evaluate(p, omega, counts, n, poisson)
    stop_reason = finished(state)

    while stop_reason is None and iterations < settings.max_iterations:
        iterations += 1
        idx = np.flatnonzero(state.active)
        h = state.hess[np.ix_(idx, idx)]
        trial_state = None
        while True:
            damped = h + lam * np.diag(np.diag(h))
            try:
                delta = np.linalg.solve(damped, -state.grad[idx])
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None:
                trial = p.copy()
                trial[idx] += delta
                trial = _project(trial)
                candidate = _evaluate(trial, omega, counts, n, poisson)
                if _improves(candidate, state):
                    trial_state = candidate
                    break
            lam *= settings.damping_increase
            if lam > settings.max_damping:
                break

        if trial_state is None:
            stop_reason = "stalled"
            _logger.warning("fit stalled: damping saturated with gradient measure %.3g", state.measure)
            break

        step = np.abs(trial - p)
        progress = trial_state.measure < state.measure
        p, state = trial, trial_state
        lam = max(lam / settings.damping_decrease, 1e-15)
        _logger.debug(
            "iteration %d: chi2=%.10g damping=%.1e gradient=%.3g", iterations, state.chi2, lam, state.measure
        )
        stop_reason = finished(state)
        negligible = np.all(step <= settings.xtol * (np.abs(p) + settings.xtol))
        if stop_reason is None and not progress and negligible:
            stop_reason = "step"
            _logger.warning("fit stopped on a negligible step with gradient measure %.3g", state.measure)

    if stop_reason is None:
        stop_reason = "max_iterations"
        _logger.warning("fit did not converge within %d iterations", settings.max_iterations)
    converged = stop_reason in CONVERGED_REASONS

    active, hess, chi2 = state.active, state.hess, state.chi2
    degenerate = [name for name, on in zip(PARAMETERS, active) if not on]
    cov_active = _covariance(hess, active)
    dof = len(counts) - int(np.count_nonzero(active))
    if not poisson and dof > 0:
        cov_active = cov_active * (chi2 / dof)
    covariance = np.full((4, 4), np.inf)
    idx = np.flatnonzero(active)
    covariance[np.ix_(idx, idx)] = cov_active
    errors = {
        name: (math.sqrt(max(covariance[i, i], 0.0)) if active[i] else math.inf)
        for i, name in enumerate(PARAMETERS)
    }

    params = RateModelParams(
        photon_number=n,
        photons_per_bin=float(p[0]),
        background_per_bin=float(p[1]),
        scale_factor=float(p[2]),
        phase_offset=float(p[3]),
        bin_duration=bin_duration,
    )
    if converged:
        _logger.info("fit converged after %d iterations: %s", iterations, params)
    return FitResult(
        params=params,
        standard_errors=errors,
        residual_sum=chi2,
        iterations=iterations,
        converged=converged,
        gradient_norm=state.measure,
        stop_reason=stop_reason,
        bins=len(counts),
        weighting=settings.weighting,
        degenerate=degenerate,
        covariance=covariance.tolist(),
    )


def fit_rate_model(
    series: BinnedSeries,
    photon_number: int,
    init: Optional[RateModelParams] = None,
    settings: Optional[FitSettings] = None,
) -> FitResult:
    """
    Fit the fringe model to a binned series.

    Starts from initial_guess unless init is given. A fit that exhausts the
    iteration cap is returned with converged=False; a singular normal matrix
    raises RankDeficiencyError naming the unidentifiable direction.
    """
    if photon_number < 1:
        raise IdentifiabilityError(f"photon_number must be >= 1, got {photon_number}")
    if len(series) == 0:
        raise IdentifiabilityError("cannot fit an empty series")
    if init is not None and init.photon_number != photon_number:
        init = init.with_updates(photon_number=photon_number)
    return fit_arrays(
        series.reference_omega,
        series.counts,
        photon_number,
        series.bin_duration,
        init=init,
        settings=settings,
    )
