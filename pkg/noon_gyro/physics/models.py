"""
Value types for the interferometer and the fringe rate model.

All models are frozen pydantic models, so they can be shared between threads
and hashed into configuration digests.
"""

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

TWO_PI = 2.0 * math.pi
SPEED_OF_LIGHT = 2.998e8


def normalize_phase(phase: float, period: float = TWO_PI) -> float:
    """Wrap a phase into [0, period)."""
    wrapped = math.fmod(phase, period)
    if wrapped < 0:
        wrapped += period
    # fmod of a tiny negative number can round up to exactly the period
    if wrapped >= period:
        wrapped = 0.0
    return wrapped


class InterferometerGeometry(BaseModel):
    """Fiber coil of the Sagnac loop."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    fiber_length: float = Field(270.5, ge=0.0, description="L, meters")
    coil_radius: float = Field(0.078, ge=0.0, description="r, meters")
    wavelength: float = Field(810e-9, gt=0.0, description="λ, meters")
    light_speed: float = Field(SPEED_OF_LIGHT, gt=0.0, description="c, meters/second")


class RateModelParams(BaseModel):
    """
    Parameters of the fringe model

        R_N(Ω) = M/N · cos²(N/2 · (S·Ω + φ0)) + B

    M and B are counted per integration window τ. The model repeats every 2π/N
    in φ0, so φ0 is stored in [0, 2π/N).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    photon_number: int = Field(1, ge=1)
    photons_per_bin: float = Field(..., ge=0.0)
    background_per_bin: float = Field(0.0, ge=0.0)
    scale_factor: float
    phase_offset: float = 0.0
    bin_duration: float = Field(..., gt=0.0)

    @field_validator("phase_offset")
    @classmethod
    def _wrap_phase(cls, value: float, info: ValidationInfo) -> float:
        if not math.isfinite(value):
            raise ValueError("phase_offset must be finite")
        # photon_number is validated first; fall back to 1 when it failed
        return normalize_phase(value, TWO_PI / info.data.get("photon_number", 1))

    @field_validator("scale_factor", "photons_per_bin", "background_per_bin")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @property
    def amplitude(self) -> float:
        """Fringe amplitude M/N in events per bin."""
        return self.photons_per_bin / self.photon_number

    def with_updates(self, **changes: Any) -> "RateModelParams":
        """Copy with some fields replaced; the result is validated again."""
        data = self.model_dump()
        data.update(changes)
        return RateModelParams(**data)


class SensitivityLimits(BaseModel):
    """Phase uncertainty limits for a photon budget."""

    model_config = ConfigDict(frozen=True)

    sql: float
    noon: float
    heisenberg: float

    @model_validator(mode="after")
    def _ordered(self) -> "SensitivityLimits":
        # tolerance for M = N where noon and heisenberg coincide
        slack = 1e-12 * self.sql
        if not (self.heisenberg <= self.noon + slack and self.noon <= self.sql + slack):
            raise ValueError("expected heisenberg <= noon <= sql")
        return self


# Fitted parameter rows of the one-photon and two-photon runs.
EXPERIMENT_N1 = RateModelParams(
    photon_number=1,
    photons_per_bin=1955.0,
    background_per_bin=63.0,
    scale_factor=1.0918,
    phase_offset=1.6767,
    bin_duration=5e-3,
)

EXPERIMENT_N2 = RateModelParams(
    photon_number=2,
    photons_per_bin=1956.0,
    background_per_bin=49.0,
    scale_factor=1.0890,
    phase_offset=1.6629,
    bin_duration=20e-3,
)
