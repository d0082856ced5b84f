"""
Detector events as recorded by a time tagger.

Timestamps are integer counts of the tagger resolution. A stream keeps its
ticks as a numpy array; DetectionEvent is the per-record view of it.
"""

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from noon_gyro.errors import UnsortedStreamError, ValidationError

CHANNELS = (1, 2)


@dataclass(frozen=True)
class DetectionEvent:
    channel: int
    timestamp: int


@dataclass(frozen=True)
class CoincidenceEvent:
    """A matched pair; timestamp of the earlier click, delta = channel 2 − channel 1 in ticks."""

    timestamp: int
    delta: int


@dataclass
class EventStream:
    """Clicks of one detector channel."""

    channel: int
    ticks: np.ndarray
    resolution: float

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValidationError(f"channel must be 1 or 2, got {self.channel}")
        if not self.resolution > 0:
            raise ValidationError(f"resolution must be positive, got {self.resolution}")
        self.ticks = np.asarray(self.ticks, dtype=np.int64)
        if self.ticks.ndim != 1:
            raise ValidationError("ticks must be one-dimensional")

    def __len__(self) -> int:
        return len(self.ticks)

    def __iter__(self) -> Iterator[DetectionEvent]:
        for tick in self.ticks:
            yield DetectionEvent(self.channel, int(tick))

    @property
    def times(self) -> np.ndarray:
        """Timestamps in seconds."""
        return self.ticks * self.resolution

    @property
    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.ticks) >= 0))

    def require_sorted(self) -> None:
        if not self.is_sorted:
            first = int(np.argmax(np.diff(self.ticks) < 0)) + 1
            raise UnsortedStreamError(
                f"channel {self.channel} stream is not time-sorted at event {first}"
            )
