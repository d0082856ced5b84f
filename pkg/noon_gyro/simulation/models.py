"""
Ground-truth and data containers for the simulator.

RotationProfile and SourceModel are configuration-facing pydantic models.
BinnedSeries holds numpy columns and is the common currency between the
simulator, the tag processor, the estimator and the precision analysis.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from noon_gyro.errors import ValidationError

SERIES_COLUMNS = ["mid_time", "count", "reference_omega", "target_omega"]


class RotationProfile(BaseModel):
    """
    Piecewise-constant angular velocity with a multiplicative wobble.

    The wobble is locked to the accumulated rotation angle, so it repeats once
    per turn of the platform, as an imbalanced bearing would.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    steps: List[Tuple[float, float]] = Field(..., min_length=1)
    wobble_relative_amplitude: float = Field(0.05, ge=0.0, lt=1.0)
    wobble_phase: float = 0.0

    @field_validator("steps")
    @classmethod
    def _positive_durations(cls, steps: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        for omega, duration in steps:
            if not np.isfinite(omega):
                raise ValueError("step velocities must be finite")
            if not duration > 0:
                raise ValueError(f"step durations must be positive, got {duration}")
        return steps

    @property
    def targets(self) -> np.ndarray:
        return np.array([omega for omega, _ in self.steps], dtype=float)

    @property
    def durations(self) -> np.ndarray:
        return np.array([duration for _, duration in self.steps], dtype=float)

    @property
    def boundaries(self) -> np.ndarray:
        """Step start times followed by the end time."""
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    @property
    def total_duration(self) -> float:
        return float(self.boundaries[-1])

    @classmethod
    def staircase(
        cls,
        start: float,
        stop: float,
        steps: int,
        dwell: float,
        last_dwell: Optional[float] = None,
        wobble_relative_amplitude: float = 0.05,
        wobble_phase: float = 0.0,
    ) -> "RotationProfile":
        """Equally spaced velocity steps from start to stop inclusive."""
        if steps < 1:
            raise ValidationError("a staircase needs at least one step")
        velocities = np.linspace(start, stop, steps) if steps > 1 else np.array([start])
        durations = [dwell] * steps
        if last_dwell is not None:
            durations[-1] = last_dwell
        return cls(
            steps=[(float(v), float(d)) for v, d in zip(velocities, durations)],
            wobble_relative_amplitude=wobble_relative_amplitude,
            wobble_phase=wobble_phase,
        )


class SourceModel(BaseModel):
    """
    Photon source and detection chain for event-level simulation.

    pair_rate is the emission rate of N-photon states reaching the detectors:
    photon pairs in a two-photon run, single photons in a one-photon run.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    pair_rate: float = Field(191_000.0, ge=0.0)
    singles_background_rate: float = Field(0.0, ge=0.0)
    detector_efficiency: float = Field(0.64, ge=0.0, le=1.0)
    dead_time: float = Field(0.0, ge=0.0)
    timestamp_resolution: float = Field(156.25e-12, gt=0.0)


@dataclass
class BinnedSeries:
    """Counts per integration window with the true angular velocity of each window."""

    bin_duration: float
    mid_times: np.ndarray
    counts: np.ndarray
    reference_omega: np.ndarray
    target_omega: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.bin_duration > 0:
            raise ValidationError(f"bin_duration must be positive, got {self.bin_duration}")
        self.mid_times = np.asarray(self.mid_times, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        self.reference_omega = np.asarray(self.reference_omega, dtype=float)
        if self.target_omega is None:
            self.target_omega = self.reference_omega.copy()
        self.target_omega = np.asarray(self.target_omega, dtype=float)

        n = len(self.mid_times)
        for name in ("counts", "reference_omega", "target_omega"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"column {name} has {len(getattr(self, name))} rows, expected {n}")
        if n > 1:
            spacing = np.diff(self.mid_times)
            if not np.allclose(spacing, self.bin_duration, rtol=1e-9, atol=0.0):
                raise ValidationError("mid_times must be uniformly spaced by bin_duration")
        if n and (not np.all(np.isfinite(self.counts)) or np.any(self.counts < 0)):
            raise ValidationError("counts must be finite and nonnegative")

    def __len__(self) -> int:
        return len(self.mid_times)

    @property
    def photon_number(self) -> Optional[int]:
        value = self.metadata.get("photon_number")
        return int(value) if value is not None else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "mid_time": self.mid_times,
                "count": self.counts,
                "reference_omega": self.reference_omega,
                "target_omega": self.target_omega,
            },
            columns=SERIES_COLUMNS,
        )

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        bin_duration: float,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "BinnedSeries":
        missing = [c for c in SERIES_COLUMNS[:3] if c not in frame.columns]
        if missing:
            raise ValidationError(f"series table lacks columns: {', '.join(missing)}")
        target = frame["target_omega"].to_numpy(float) if "target_omega" in frame else None
        return cls(
            bin_duration=bin_duration,
            mid_times=frame["mid_time"].to_numpy(float),
            counts=frame["count"].to_numpy(float),
            reference_omega=frame["reference_omega"].to_numpy(float),
            target_omega=target,
            metadata=dict(metadata or {}),
        )
