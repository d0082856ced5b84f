"""
Two-channel coincidence matching.

Clicks are matched one-to-one, greedily in time order: each click pairs with the
earliest unmatched click of the other channel within the window. At equal
timestamps channel 1 is processed first. Because every earlier click of the
other channel within reach has already been consumed, the candidate is always
the next unprocessed click of the other channel, so one merge pass suffices.

Only clicks with a partner in reach can match, and pairs never span a gap wider
than the window, so the merge runs per cluster of the pruned timeline and
isolated pairs are matched without it.
"""

import logging
import math
from typing import List, Tuple

import numpy as np

from noon_gyro.errors import ValidationError
from noon_gyro.tagging.events import CoincidenceEvent, EventStream

_logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 1e-9


def window_ticks(window: float, resolution: float) -> int:
    """Largest tick separation still inside the window."""
    if not window > 0:
        raise ValidationError(f"coincidence window must be positive, got {window}")
    return int(math.floor(window / resolution))


def _has_partner(ticks: np.ndarray, other: np.ndarray, reach: int) -> np.ndarray:
    """Mask of clicks with at least one click of the other channel within reach."""
    if len(other) == 0:
        return np.zeros(len(ticks), dtype=bool)
    low = np.searchsorted(other, ticks - reach, side="left")
    high = np.searchsorted(other, ticks + reach, side="right")
    return high > low


def _greedy(t1: List[int], t2: List[int], reach: int) -> List[Tuple[int, int]]:
    """One merge pass over a cluster; (timestamp, delta) pairs in time order."""
    n1, n2 = len(t1), len(t2)
    pairs: List[Tuple[int, int]] = []
    i = j = 0
    while i < n1 and j < n2:
        a, b = t1[i], t2[j]
        if a <= b:
            if b - a <= reach:
                pairs.append((a, b - a))
                j += 1
            i += 1
        else:
            if a - b <= reach:
                pairs.append((b, b - a))
                i += 1
            j += 1
    return pairs


def count_coincidences(
    stream1: EventStream,
    stream2: EventStream,
    window: float = DEFAULT_WINDOW,
) -> List[CoincidenceEvent]:
    """Matched pairs of clicks within window seconds, sorted by timestamp."""
    if not np.isclose(stream1.resolution, stream2.resolution, rtol=1e-12, atol=0.0):
        raise ValidationError("streams use different timestamp resolutions")
    reach = window_ticks(window, stream1.resolution)
    stream1.require_sorted()
    stream2.require_sorted()

    t1 = stream1.ticks.astype(np.int64, copy=False)
    t2 = stream2.ticks.astype(np.int64, copy=False)
    c1 = t1[_has_partner(t1, t2, reach)]
    c2 = t2[_has_partner(t2, t1, reach)]

    # merged timeline, channel 1 first at equal ticks
    ticks = np.concatenate([c1, c2])
    channel = np.concatenate([np.zeros(len(c1), dtype=np.int8), np.ones(len(c2), dtype=np.int8)])
    order = np.lexsort((channel, ticks))
    ticks, channel = ticks[order], channel[order]

    starts = np.flatnonzero(np.diff(ticks, prepend=ticks[:1] - reach - 1) > reach)
    sizes = np.diff(np.append(starts, len(ticks)))

    # a two-click cluster holds one click per channel, matched to each other
    single = starts[sizes == 2]
    first, second = ticks[single], ticks[single + 1]
    deltas = np.where(channel[single] == 0, second - first, first - second)
    stamps = [first]
    delta_parts = [deltas]

    for start, size in zip(starts[sizes > 2].tolist(), sizes[sizes > 2].tolist()):
        block_ticks = ticks[start : start + size]
        block_channel = channel[start : start + size]
        pairs = _greedy(
            block_ticks[block_channel == 0].tolist(), block_ticks[block_channel == 1].tolist(), reach
        )
        if pairs:
            block = np.array(pairs, dtype=np.int64)
            stamps.append(block[:, 0])
            delta_parts.append(block[:, 1])

    timestamp = np.concatenate(stamps)
    delta = np.concatenate(delta_parts)
    order = np.lexsort((delta, timestamp))
    matches = [CoincidenceEvent(t, d) for t, d in zip(timestamp[order].tolist(), delta[order].tolist())]

    _logger.debug(
        "matched %d coincidences from %d and %d clicks (%d clusters need a merge pass)",
        len(matches), len(t1), len(t2), int(np.count_nonzero(sizes > 2)),
    )
    return matches


def coincidence_ticks(coincidences: List[CoincidenceEvent]) -> np.ndarray:
    return np.fromiter((c.timestamp for c in coincidences), dtype=np.int64, count=len(coincidences))
