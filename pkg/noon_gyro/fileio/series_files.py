"""
Binned-series text tables.

    # noon-gyro series v1
    # bin_duration=0.005
    # <key>=<value>            one line per metadata entry, keys sorted
    mid_time,count,reference_omega,target_omega
    <rows>

Floats are written in their shortest round-trip form and read back exactly.
"""

import io
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
import pandas as pd

from noon_gyro.errors import FileParseError, ValidationError
from noon_gyro.fileio.atomic import write_text_atomic
from noon_gyro.simulation.models import SERIES_COLUMNS, BinnedSeries

_logger = logging.getLogger(__name__)

SERIES_MAGIC = "# noon-gyro series v1"
INT_KEYS = {"photon_number", "seed", "dropped_events", "channel"}
FLOAT_KEYS = {"bin_duration", "coincidence_window"}

PathLike = Union[str, Path]


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(key: str, raw: str) -> Any:
    if key in INT_KEYS:
        return int(raw)
    if key in FLOAT_KEYS:
        return float(raw)
    return raw


def format_series(series: BinnedSeries) -> str:
    lines: List[str] = [SERIES_MAGIC, f"# bin_duration={series.bin_duration!r}"]
    for key in sorted(series.metadata):
        if key == "bin_duration":
            continue
        value = _format_value(series.metadata[key])
        if "\n" in value:
            raise ValidationError(f"metadata value of {key!r} spans lines")
        lines.append(f"# {key}={value}")
    buffer = io.StringIO()
    series.to_frame().to_csv(buffer, index=False, lineterminator="\n")
    return "\n".join(lines) + "\n" + buffer.getvalue()


def write_series(path: PathLike, series: BinnedSeries) -> Path:
    _logger.info("writing %d bins to %s", len(series), path)
    return write_text_atomic(path, format_series(series))


def read_series(path: PathLike) -> BinnedSeries:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FileParseError(f"cannot read series: {exc}", path=str(path)) from exc
    return parse_series(text, str(path))


def parse_series(text: str, path: str = "<series>") -> BinnedSeries:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SERIES_MAGIC:
        raise FileParseError(f"expected {SERIES_MAGIC!r}", path=path, line=1)

    metadata: Dict[str, Any] = {}
    header_end = 1
    while header_end < len(lines) and lines[header_end].startswith("#"):
        entry = lines[header_end][1:].strip()
        key, sep, raw = entry.partition("=")
        if not sep or not key.strip():
            raise FileParseError("malformed metadata line", path=path, line=header_end + 1)
        try:
            metadata[key.strip()] = _parse_value(key.strip(), raw.strip())
        except ValueError as exc:
            raise FileParseError(f"bad value for {key.strip()}", path=path, line=header_end + 1) from exc
        header_end += 1

    if "bin_duration" not in metadata:
        raise FileParseError("header lacks bin_duration", path=path, line=header_end)
    if header_end >= len(lines):
        raise FileParseError("missing column header", path=path, line=header_end + 1)
    columns = [c.strip() for c in lines[header_end].split(",")]
    if columns != SERIES_COLUMNS:
        raise FileParseError(
            f"expected columns {','.join(SERIES_COLUMNS)}", path=path, line=header_end + 1
        )

    body = "\n".join(lines[header_end:])
    try:
        frame = pd.read_csv(io.StringIO(body), dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        raise FileParseError(f"malformed table: {exc}", path=path) from exc

    numeric = {}
    for column in SERIES_COLUMNS:
        values = pd.to_numeric(frame[column], errors="coerce")
        bad = np.flatnonzero(values.isna().to_numpy())
        if len(bad):
            raise FileParseError(
                f"non-numeric {column} {frame[column].iloc[bad[0]]!r}",
                path=path,
                line=header_end + 2 + int(bad[0]),
            )
        # python float parsing is exact for round-trip reprs
        numeric[column] = frame[column].astype(float).to_numpy()
    bin_duration = metadata.pop("bin_duration")
    try:
        return BinnedSeries.from_frame(pd.DataFrame(numeric), bin_duration, metadata)
    except ValidationError as exc:
        raise FileParseError(str(exc), path=path) from exc
