"""
Fixed-window binning of timestamped events into count series.
"""

import logging
from typing import Callable, List, Optional

import numpy as np

from noon_gyro.simulation.counts import bin_count
from noon_gyro.simulation.models import BinnedSeries
from noon_gyro.tagging.coincidence import coincidence_ticks
from noon_gyro.tagging.events import CoincidenceEvent, EventStream

_logger = logging.getLogger(__name__)

OmegaLookup = Callable[[np.ndarray], np.ndarray]


def bin_events(
    times: np.ndarray,
    bin_duration: float,
    t0: float,
    t1: float,
    omega_lookup: OmegaLookup,
    target_lookup: Optional[OmegaLookup] = None,
    metadata: Optional[dict] = None,
) -> BinnedSeries:
    """
    Count events with t0 + k·τ <= t < t0 + (k+1)·τ.

    Events outside [t0, t1) are dropped; the drop count is logged and kept in
    the series metadata under "dropped_events".
    """
    n = bin_count(t1 - t0, bin_duration)
    times = np.asarray(times, dtype=float)
    inside = (times >= t0) & (times < t1)
    dropped = int(len(times) - np.count_nonzero(inside))
    index = np.floor((times[inside] - t0) / bin_duration).astype(np.int64)
    np.clip(index, 0, n - 1, out=index)
    counts = np.bincount(index, minlength=n).astype(float)

    mid_times = t0 + (np.arange(n) + 0.5) * bin_duration
    reference = np.asarray(omega_lookup(mid_times), dtype=float)
    target = np.asarray(target_lookup(mid_times), dtype=float) if target_lookup else None
    if dropped:
        _logger.info("dropped %d events outside [%g, %g) s", dropped, t0, t1)

    info = dict(metadata or {})
    info["dropped_events"] = dropped
    return BinnedSeries(
        bin_duration=bin_duration,
        mid_times=mid_times,
        counts=counts,
        reference_omega=reference,
        target_omega=target,
        metadata=info,
    )


def bin_singles(
    stream: EventStream,
    bin_duration: float,
    t0: float,
    t1: float,
    omega_lookup: OmegaLookup,
    target_lookup: Optional[OmegaLookup] = None,
    metadata: Optional[dict] = None,
) -> BinnedSeries:
    """Singles series of one detector channel."""
    info = {"channel": stream.channel}
    info.update(metadata or {})
    return bin_events(
        stream.times, bin_duration, t0, t1, omega_lookup, target_lookup, metadata=info
    )


def bin_coincidences(
    coincidences: List[CoincidenceEvent],
    resolution: float,
    bin_duration: float,
    t0: float,
    t1: float,
    omega_lookup: OmegaLookup,
    target_lookup: Optional[OmegaLookup] = None,
    metadata: Optional[dict] = None,
) -> BinnedSeries:
    """Two-photon coincidence series."""
    times = coincidence_ticks(coincidences) * resolution
    return bin_events(times, bin_duration, t0, t1, omega_lookup, target_lookup, metadata)
