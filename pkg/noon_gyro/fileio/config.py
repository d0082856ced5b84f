"""
Run configuration.

One JSON document holds every setting of a run. Every field defaults to the
experiment's values, so `{}` is a complete configuration. Unknown keys are
rejected.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Optional, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from noon_gyro.errors import FileParseError, ValidationError
from noon_gyro.estimation.fitting import FitSettings
from noon_gyro.fileio.atomic import write_text_atomic
from noon_gyro.physics.models import EXPERIMENT_N1, EXPERIMENT_N2, InterferometerGeometry, RateModelParams
from noon_gyro.simulation.models import RotationProfile, SourceModel
from noon_gyro.simulation.rotation import experiment_sweep_profile
from noon_gyro.tagging.coincidence import DEFAULT_WINDOW

_logger = logging.getLogger(__name__)

OUTPUT_DIR_ENVVAR = "NOON_GYRO_OUTPUT_DIR"


def _is_multiple(value: float, unit: float) -> bool:
    ratio = value / unit
    return abs(ratio - round(ratio)) <= 1e-9 * max(1.0, ratio)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    geometry: InterferometerGeometry = Field(default_factory=InterferometerGeometry)
    model_n1: RateModelParams = EXPERIMENT_N1
    model_n2: RateModelParams = EXPERIMENT_N2
    # None selects the default sweep of the run
    profile_n1: Optional[RotationProfile] = None
    profile_n2: Optional[RotationProfile] = None
    wobble_relative_amplitude: float = Field(0.05, ge=0.0, lt=1.0)
    source: SourceModel = Field(default_factory=SourceModel)
    seed: int = Field(0, ge=0)
    coincidence_window: float = Field(DEFAULT_WINDOW, gt=0.0)
    bin_duration_n1: float = Field(5e-3, gt=0.0)
    bin_duration_n2: float = Field(20e-3, gt=0.0)
    fit: FitSettings = Field(default_factory=FitSettings)
    bootstrap_resamples: int = Field(0, ge=0)
    output_dir: str = "."

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        resolution = self.source.timestamp_resolution
        for n, tau in ((1, self.bin_duration_n1), (2, self.bin_duration_n2)):
            if not _is_multiple(tau, resolution):
                raise ValueError(
                    f"bin_duration_n{n}={tau} is not a multiple of the timestamp resolution {resolution}"
                )
        if self.model_n1.photon_number != 1 or self.model_n2.photon_number != 2:
            raise ValueError("model_n1 and model_n2 must have photon_number 1 and 2")
        if 0 < self.bootstrap_resamples < 100:
            raise ValueError("bootstrap_resamples must be 0 (off) or at least 100")
        return self

    def bin_duration(self, photon_number: int) -> float:
        return self.bin_duration_n1 if photon_number == 1 else self.bin_duration_n2

    def model(self, photon_number: int) -> RateModelParams:
        """Rate model of the run with the configured bin duration."""
        _check_run(photon_number)
        base = self.model_n1 if photon_number == 1 else self.model_n2
        return base.with_updates(bin_duration=self.bin_duration(photon_number))

    def profile(self, photon_number: int) -> RotationProfile:
        _check_run(photon_number)
        custom = self.profile_n1 if photon_number == 1 else self.profile_n2
        if custom is not None:
            return custom
        return experiment_sweep_profile(photon_number, self.wobble_relative_amplitude)


def _check_run(photon_number: int) -> None:
    if photon_number not in (1, 2):
        raise ValidationError(f"runs exist for N=1 and N=2, got N={photon_number}")


def config_hash(config: RunConfig) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON dump."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Read a configuration file; no path gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileParseError(f"cannot read configuration: {exc}", path=str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileParseError(exc.msg, path=str(path), line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise FileParseError("configuration must be a JSON object", path=str(path), line=1)
    try:
        config = RunConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        raise ValidationError(f"{path}: invalid configuration:\n{exc}") from exc
    _logger.info("loaded configuration %s (hash %s)", path, config_hash(config))
    return config


def dump_config(config: RunConfig, path: Union[str, Path]) -> Path:
    return write_text_atomic(path, config.model_dump_json(indent=2) + "\n")
