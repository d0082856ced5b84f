"""
Empirical precision per velocity block and the run-level precision report.

A block is a contiguous run of bins sharing one step target. Every bin's count
is inverted to a velocity on the fringe branch through the block target, and
the spread of the deviations from the reference velocity is the block's
empirical precision.
"""

import logging
import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from noon_gyro.errors import AmbiguousBranchError, ConvergenceError, ValidationError
from noon_gyro.estimation.fitting import FitResult
from noon_gyro.metrics.limits import bias_point, heisenberg_limit, invert_rate, sql_limit
from noon_gyro.physics.models import RateModelParams
from noon_gyro.simulation.models import BinnedSeries

_logger = logging.getLogger(__name__)

Reference = Literal["instantaneous", "block_mean"]

MIN_BLOCK_BINS = 3
DEVIATION_COLUMNS = ["block", "target_omega", "reference_omega", "estimate", "deviation", "clamped"]


class BlockPrecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    block: int
    omega_center: float
    sample_std: float = Field(..., ge=0.0)
    std_error: float = Field(..., ge=0.0)
    count: int
    clamped: int = 0


class RunPrecision(BaseModel):
    """Precision figures of one fitted run."""

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    photon_number: int
    params: RateModelParams
    sql: float
    heisenberg: float
    bias_omega: float
    bias_precision: float
    blocks: List[BlockPrecision]
    min_block_precision: Optional[float] = None
    min_block_std_error: Optional[float] = None
    min_block_omega: Optional[float] = None


class PrecisionReport(BaseModel):
    """
    Precision of the one-photon and two-photon runs side by side.

    The system limits sql and heisenberg refer to the one-photon fit, i.e. to
    the detected photon flux of the measurement system.
    """

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    runs: List[RunPrecision]
    sql: float
    heisenberg: float
    ideal_noon_limit: float
    super_resolution_ratio: float
    super_resolution_std_error: float
    checks: Dict[str, bool]

    @model_validator(mode="after")
    def _limits_ordered(self) -> "PrecisionReport":
        if not self.heisenberg <= self.ideal_noon_limit <= self.sql:
            raise ValueError("expected heisenberg <= ideal_noon_limit <= sql")
        return self

    def run(self, photon_number: int) -> RunPrecision:
        for run in self.runs:
            if run.photon_number == photon_number:
                return run
        raise KeyError(photon_number)

    @property
    def bias_omega(self) -> float:
        return self.run(2).bias_omega

    @property
    def bias_precision(self) -> float:
        return self.run(2).bias_precision

    @property
    def block_table(self) -> List[BlockPrecision]:
        return self.run(2).blocks

    @property
    def min_block_precision(self) -> Optional[float]:
        return self.run(2).min_block_precision


def block_labels(target_omega: np.ndarray) -> np.ndarray:
    """Block index per bin: increments wherever the step target changes."""
    targets = pd.Series(np.asarray(target_omega, dtype=float))
    return (targets.diff().fillna(0.0) != 0.0).cumsum().to_numpy()


def velocity_deviations(
    series: BinnedSeries, params: RateModelParams, reference: Reference = "instantaneous"
) -> pd.DataFrame:
    """
    Per-bin deviations Ω^E − Ω_i.

    Ω_i is the bin's own reference velocity, or the block's mean reference
    velocity with reference="block_mean". Blocks whose target sits on a fringe
    extremum are left out with a warning.
    """
    if reference not in ("instantaneous", "block_mean"):
        raise ValidationError(f"unknown reference {reference!r}")
    frame = pd.DataFrame(
        {
            "block": block_labels(series.target_omega),
            "target_omega": series.target_omega,
            "reference_omega": series.reference_omega,
            "count": series.counts,
        }
    )
    parts = []
    for block, group in frame.groupby("block", sort=True):
        target = float(group["target_omega"].iloc[0])
        try:
            estimate, clamped = invert_rate(params, group["count"].to_numpy(), target)
        except AmbiguousBranchError:
            _logger.warning("block %d at %.4g rad/s sits on a fringe extremum; skipped", block, target)
            continue
        truth = group["reference_omega"].to_numpy()
        if reference == "block_mean":
            truth = np.full(len(group), truth.mean())
        parts.append(
            pd.DataFrame(
                {
                    "block": int(block),
                    "target_omega": target,
                    "reference_omega": truth,
                    "estimate": estimate,
                    "deviation": estimate - truth,
                    "clamped": clamped,
                }
            )
        )
    if not parts:
        return pd.DataFrame({name: [] for name in DEVIATION_COLUMNS})
    return pd.concat(parts, ignore_index=True)[DEVIATION_COLUMNS]


def block_precision(
    series: BinnedSeries,
    params: RateModelParams,
    reference: Reference = "instantaneous",
    deviations: Optional[pd.DataFrame] = None,
) -> List[BlockPrecision]:
    """Sample standard deviation of the velocity deviations per block."""
    if deviations is None:
        deviations = velocity_deviations(series, params, reference)
    table = []
    for block, group in deviations.groupby("block", sort=True):
        n = len(group)
        if n < MIN_BLOCK_BINS:
            _logger.warning("block %d has %d bins (< %d); skipped", block, n, MIN_BLOCK_BINS)
            continue
        sigma = float(np.std(group["deviation"].to_numpy(), ddof=1))
        table.append(
            BlockPrecision(
                block=int(block),
                omega_center=float(group["target_omega"].iloc[0]),
                sample_std=sigma,
                std_error=sigma / math.sqrt(2.0 * (n - 1)),
                count=n,
                clamped=int(group["clamped"].sum()),
            )
        )
    return table


def minimum_block(blocks: List[BlockPrecision]) -> Optional[BlockPrecision]:
    return min(blocks, key=lambda b: b.sample_std) if blocks else None


def super_resolution_ratio(fit1: FitResult, fit2: FitResult) -> Tuple[float, float]:
    """
    Fringe-frequency ratio 2·S₂/S₁ of the two-photon to the one-photon fit.

    The standard error propagates both S errors to first order, treating the
    fits as independent.
    """
    _require_pair(fit1, fit2)
    s1, s2 = fit1.params.scale_factor, fit2.params.scale_factor
    e1, e2 = fit1.error_of("scale_factor"), fit2.error_of("scale_factor")
    ratio = 2.0 * s2 / s1
    return ratio, abs(ratio) * math.hypot(e1 / s1, e2 / s2)


def _require_pair(fit1: FitResult, fit2: FitResult) -> None:
    if fit1.photon_number != 1 or fit2.photon_number != 2:
        raise ValidationError(
            f"expected fits for N=1 and N=2, got N={fit1.photon_number} and N={fit2.photon_number}"
        )
    for fit in (fit1, fit2):
        if not fit.converged:
            raise ConvergenceError(f"fit for N={fit.photon_number} did not converge")


def run_precision(
    fit: FitResult, series: BinnedSeries, reference: Reference = "instantaneous"
) -> RunPrecision:
    if len(series) == 0:
        raise ValidationError(f"series for N={fit.photon_number} is empty")
    if series.photon_number is not None and series.photon_number != fit.photon_number:
        raise ValidationError(
            f"series is labelled N={series.photon_number} but the fit is for N={fit.photon_number}"
        )
    params = fit.params
    omega, precision = bias_point(params)
    blocks = block_precision(series, params, reference)
    best = minimum_block(blocks)
    return RunPrecision(
        photon_number=fit.photon_number,
        params=params,
        sql=sql_limit(params),
        heisenberg=heisenberg_limit(params),
        bias_omega=omega,
        bias_precision=precision,
        blocks=blocks,
        min_block_precision=best.sample_std if best else None,
        min_block_std_error=best.std_error if best else None,
        min_block_omega=best.omega_center if best else None,
    )


def build_report(
    fit1: FitResult,
    fit2: FitResult,
    series1: BinnedSeries,
    series2: BinnedSeries,
    reference: Reference = "instantaneous",
) -> PrecisionReport:
    """Assemble per-run precision, system limits, super-resolution and ordering checks."""
    if len(series1) == 0 and len(series2) == 0:
        raise ValidationError("both series are empty")
    _require_pair(fit1, fit2)
    run1 = run_precision(fit1, series1, reference)
    run2 = run_precision(fit2, series2, reference)
    ratio, ratio_error = super_resolution_ratio(fit1, fit2)

    sql, heisenberg = run1.sql, run1.heisenberg
    ideal = sql / math.sqrt(2.0)
    min2 = run2.min_block_precision
    checks = {
        "heisenberg_below_bias_n2": heisenberg < run2.bias_precision,
        "bias_n2_below_sql": run2.bias_precision < sql,
        "sql_below_bias_n1": sql < run1.bias_precision,
        "ideal_noon_below_bias_n2": ideal < run2.bias_precision,
        "min_block_n2_below_sql": min2 is not None and min2 < sql,
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        _logger.warning("precision ordering checks failed: %s", ", ".join(failed))
    return PrecisionReport(
        runs=[run1, run2],
        sql=sql,
        heisenberg=heisenberg,
        ideal_noon_limit=ideal,
        super_resolution_ratio=ratio,
        super_resolution_std_error=ratio_error,
        checks=checks,
    )
