from .events import CoincidenceEvent, DetectionEvent, EventStream
from .coincidence import DEFAULT_WINDOW, count_coincidences
from .binning import bin_coincidences, bin_events, bin_singles

__all__ = [
    "DetectionEvent",
    "CoincidenceEvent",
    "EventStream",
    "DEFAULT_WINDOW",
    "count_coincidences",
    "bin_events",
    "bin_singles",
    "bin_coincidences",
]
