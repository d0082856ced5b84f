"""
Event-level simulation: time-tagged clicks on the two detectors.

N-photon states are emitted as a Poisson process. Each photon is detected
with the detector efficiency, and the interferometer output routes the state
according to the instantaneous detection probability:

  N=2  the pair splits over both detectors with probability cos²(SΩ+φ0),
       otherwise both photons leave through one detector and produce a
       single click there.
  N=1  the photon reaches channel 2 with probability cos²((SΩ+φ0)/2),
       channel 1 otherwise.

Uncorrelated background clicks are added per channel. Photons of a pair
arrive simultaneously; detector jitter is absorbed by the coincidence window.
"""

import logging
import math
from typing import List, Tuple

import numpy as np

from noon_gyro.errors import ValidationError
from noon_gyro.physics.models import RateModelParams
from noon_gyro.physics.sagnac import detection_probability
from noon_gyro.simulation import seeding
from noon_gyro.simulation.models import RotationProfile, SourceModel
from noon_gyro.simulation.rotation import profile_velocity
from noon_gyro.tagging.events import EventStream

_logger = logging.getLogger(__name__)

SEGMENT_SECONDS = 1.0


def _segment_clicks(
    source: SourceModel,
    params: RateModelParams,
    profile: RotationProfile,
    rng: np.random.Generator,
    start: float,
    stop: float,
) -> Tuple[np.ndarray, np.ndarray]:
    span = stop - start
    n_states = rng.poisson(source.pair_rate * span)
    times = np.sort(rng.uniform(start, stop, n_states))
    omega = profile_velocity(profile, times) if n_states else np.empty(0)
    phase = params.scale_factor * omega + params.phase_offset
    bright = rng.random(n_states) < detection_probability(params.photon_number, phase)
    eta = source.detector_efficiency

    if params.photon_number == 1:
        detected = rng.random(n_states) < eta
        ch1 = times[detected & ~bright]
        ch2 = times[detected & bright]
    else:
        first = rng.random(n_states) < eta
        second = rng.random(n_states) < eta
        to_ch1 = rng.random(n_states) < 0.5
        bunched = ~bright & (first | second)
        ch1 = np.concatenate([times[bright & first], times[bunched & to_ch1]])
        ch2 = np.concatenate([times[bright & second], times[bunched & ~to_ch1]])

    background = source.singles_background_rate * span
    ch1 = np.concatenate([ch1, rng.uniform(start, stop, rng.poisson(background))])
    ch2 = np.concatenate([ch2, rng.uniform(start, stop, rng.poisson(background))])
    return np.sort(ch1), np.sort(ch2)


def apply_dead_time(ticks: np.ndarray, dead_ticks: float) -> np.ndarray:
    """Drop clicks closer than dead_ticks to the previous registered click (non-paralyzable)."""
    if dead_ticks <= 0 or len(ticks) == 0:
        return ticks
    keep = np.ones(len(ticks), dtype=bool)
    # a click at least dead_ticks after its raw predecessor is always registered
    crowded = np.flatnonzero(np.diff(ticks) < dead_ticks) + 1
    last = 0
    for i in crowded.tolist():
        if keep[i - 1]:
            last = int(ticks[i - 1])
        if int(ticks[i]) - last < dead_ticks:
            keep[i] = False
    return ticks[keep]


def simulate_time_tags(
    source: SourceModel,
    params: RateModelParams,
    profile: RotationProfile,
    seed: int,
) -> Tuple[EventStream, EventStream]:
    """Time-sorted click streams of channels 1 and 2 over the whole profile."""
    if params.photon_number > 2:
        raise ValidationError("event-level simulation supports N=1 and N=2 only")

    total = profile.total_duration
    n_segments = max(1, math.ceil(total / SEGMENT_SECONDS - 1e-12))
    resolution = source.timestamp_resolution
    parts: List[List[np.ndarray]] = [[], []]
    for k in range(n_segments):
        start = k * SEGMENT_SECONDS
        stop = min(total, (k + 1) * SEGMENT_SECONDS)
        rng = seeding.derive_rng(seed, seeding.TIME_TAGS, k)
        for channel, times in enumerate(_segment_clicks(source, params, profile, rng, start, stop)):
            parts[channel].append(np.floor(times / resolution).astype(np.int64))

    dead_ticks = source.dead_time / resolution
    streams = []
    for channel, chunks in zip((1, 2), parts):
        ticks = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        ticks = apply_dead_time(ticks, dead_ticks)
        streams.append(EventStream(channel=channel, ticks=ticks, resolution=resolution))

    _logger.info(
        "simulated %.3g s of clicks for N=%d: %d on channel 1, %d on channel 2",
        total, params.photon_number, len(streams[0]), len(streams[1]),
    )
    return streams[0], streams[1]
