"""
Fit and precision report documents, plot-data tables and the text summary.

Reports are JSON dumps of pydantic documents; infinite standard errors are
written as the JSON constant Infinity.
"""

import io
import json
import logging
import math
import os
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd
import pydantic
from jinja2 import Environment, FileSystemLoader, StrictUndefined
from pydantic import BaseModel, ConfigDict

from noon_gyro import __version__
from noon_gyro.errors import FileParseError
from noon_gyro.estimation.bands import prediction_band
from noon_gyro.estimation.fitting import FitResult
from noon_gyro.estimation.resampling import ParameterSpread
from noon_gyro.fileio.atomic import write_text_atomic
from noon_gyro.metrics.limits import numerical_uncertainty, propagated_uncertainty, sql_limit
from noon_gyro.metrics.precision_report import PrecisionReport, block_precision, velocity_deviations
from noon_gyro.physics.models import RateModelParams
from noon_gyro.physics.sagnac import expected_rate
from noon_gyro.simulation.models import BinnedSeries

_logger = logging.getLogger(__name__)

TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "templates")
SUMMARY_TEMPLATE = "report_summary.txt"
CURVE_POINTS = 400

PathLike = Union[str, Path]


class FitReport(BaseModel):
    """Fit of one series, with the bootstrap spread when requested."""

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    kind: str = "fit"
    version: str = __version__
    series: str
    config_hash: Optional[str] = None
    fit: FitResult
    bootstrap: Optional[ParameterSpread] = None
    band_coverage: Optional[float] = None


class PrecisionDocument(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    kind: str = "precision"
    version: str = __version__
    fits: Dict[str, str]
    series: Dict[str, str]
    report: PrecisionReport


def write_json_document(path: PathLike, document: BaseModel) -> Path:
    return write_text_atomic(path, document.model_dump_json(indent=2) + "\n")


def _read_document(path: PathLike, model):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FileParseError(f"cannot read report: {exc}", path=str(path)) from exc
    try:
        return model.model_validate_json(text)
    except pydantic.ValidationError as exc:
        line = None
        try:
            json.loads(text)
        except json.JSONDecodeError as decode_error:
            line = decode_error.lineno
        raise FileParseError(f"invalid {model.__name__} document:\n{exc}", path=str(path), line=line) from exc


def read_fit_report(path: PathLike) -> FitReport:
    return _read_document(path, FitReport)


def read_precision_document(path: PathLike) -> PrecisionDocument:
    return _read_document(path, PrecisionDocument)


# --- Plot data ---


def fit_curve_table(series: BinnedSeries, params: RateModelParams, level: float = 0.99) -> pd.DataFrame:
    """Counts against Ω with the fitted curve and its Poisson band."""
    omega = series.reference_omega
    low, high = prediction_band(params, omega, level)
    return pd.DataFrame(
        {
            "omega": omega,
            "count": series.counts,
            "fit": expected_rate(params, omega),
            "band_low": low,
            "band_high": high,
        }
    )


def time_trace_table(series: BinnedSeries) -> pd.DataFrame:
    return pd.DataFrame(
        {"time": series.mid_times, "omega": series.reference_omega, "count": series.counts}
    )


def precision_tables(
    series: BinnedSeries,
    params: RateModelParams,
    reference: str = "instantaneous",
    seed: int = 0,
    draws: int = 2000,
) -> Dict[str, pd.DataFrame]:
    """Deviation points, block table and the ΔΩ curves of one run."""
    deviations = velocity_deviations(series, params, reference)  # type: ignore[arg-type]
    blocks = block_precision(series, params, reference, deviations=deviations)  # type: ignore[arg-type]
    points = pd.DataFrame(
        {
            "omega": deviations["reference_omega"],
            "abs_deviation": np.abs(deviations["deviation"].to_numpy(dtype=float)),
            "block": deviations["block"].astype(int),
        }
    )
    block_table = pd.DataFrame(
        [b.model_dump() for b in blocks],
        columns=["block", "omega_center", "sample_std", "std_error", "count", "clamped"],
    )
    if len(series):
        grid = np.linspace(series.reference_omega.min(), series.reference_omega.max(), CURVE_POINTS)
    else:
        grid = np.empty(0)
    curve = pd.DataFrame(
        {
            "omega": grid,
            "propagated": propagated_uncertainty(params, grid),
            "numerical": numerical_uncertainty(params, grid, draws=draws, seed=seed)
            if len(grid)
            else grid,
            "sql": np.full(len(grid), sql_limit(params)),
        }
    )
    return {"points": points, "blocks": block_table, "curve": curve}


def write_table(path: PathLike, frame: pd.DataFrame) -> Path:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return write_text_atomic(path, buffer.getvalue())


# --- Summary ---


def _fmt(value: Optional[float], digits: int = 4) -> str:
    if value is None:
        return "n/a"
    if math.isinf(value):
        return "inf"
    return f"{value:.{digits}g}"


def render_summary(report: PrecisionReport) -> str:
    env = Environment(
        loader=FileSystemLoader(TEMPLATE_DIR),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters["g"] = _fmt
    return env.get_template(SUMMARY_TEMPLATE).render(report=report, version=__version__)


def write_summary(path: PathLike, report: PrecisionReport) -> Path:
    return write_text_atomic(path, render_summary(report))
