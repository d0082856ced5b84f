from .config import RunConfig, config_hash, dump_config, load_config
from .event_files import read_events, write_events, write_events_text
from .report_files import (
    FitReport,
    PrecisionDocument,
    read_fit_report,
    read_precision_document,
    render_summary,
    write_json_document,
)
from .series_files import read_series, write_series

__all__ = [
    "FitReport",
    "PrecisionDocument",
    "RunConfig",
    "config_hash",
    "dump_config",
    "load_config",
    "read_events",
    "read_fit_report",
    "read_precision_document",
    "read_series",
    "render_summary",
    "write_events",
    "write_events_text",
    "write_json_document",
    "write_series",
]
