"""
Time-tag event files.

Binary NTAG layout, little-endian:

    header (16 bytes)  magic b"NTAG" | uint16 version = 1 | uint16 reserved = 0
                       | uint64 tick resolution in femtoseconds
    record (12 bytes)  uint8 channel | 3 bytes reserved = 0 | uint64 tick count

Records are ordered by tick, then channel. The text twin holds one
`channel,timestamp_ticks` record per line, optionally preceded by a
`# resolution_fs=<int>` line.
"""

import logging
import struct
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from noon_gyro.errors import FileParseError, ValidationError
from noon_gyro.fileio.atomic import write_bytes_atomic, write_text_atomic
from noon_gyro.tagging.events import CHANNELS, EventStream

_logger = logging.getLogger(__name__)

MAGIC = b"NTAG"
VERSION = 1
HEADER = struct.Struct("<4sHHQ")
RECORD_DTYPE = np.dtype([("channel", "u1"), ("reserved", "V3"), ("ticks", "<u8")])
RESOLUTION_PREFIX = "# resolution_fs="
FEMTO = 1e15

PathLike = Union[str, Path]


def resolution_to_fs(resolution: float) -> int:
    fs = resolution * FEMTO
    whole = int(round(fs))
    if whole < 1 or abs(fs - whole) > 1e-6 * fs:
        raise ValidationError(f"resolution {resolution} s is not a whole number of femtoseconds")
    return whole


def _merged(streams: List[EventStream]) -> Tuple[np.ndarray, np.ndarray, float]:
    if not streams:
        raise ValidationError("no event streams to write")
    resolution = streams[0].resolution
    for stream in streams:
        if not np.isclose(stream.resolution, resolution, rtol=1e-12, atol=0.0):
            raise ValidationError("event streams use different timestamp resolutions")
        if len(stream) and stream.ticks.min() < 0:
            raise ValidationError(f"channel {stream.channel} has negative timestamps")
    channels = np.concatenate([np.full(len(s), s.channel, dtype=np.uint8) for s in streams])
    ticks = np.concatenate([s.ticks for s in streams]).astype(np.int64)
    order = np.lexsort((channels, ticks))
    return channels[order], ticks[order], resolution


def _split(channels: np.ndarray, ticks: np.ndarray, resolution: float) -> Tuple[EventStream, EventStream]:
    streams = []
    for channel in CHANNELS:
        picked = np.sort(ticks[channels == channel], kind="stable")
        streams.append(EventStream(channel=channel, ticks=picked, resolution=resolution))
    return streams[0], streams[1]


def write_events(path: PathLike, streams: List[EventStream]) -> Path:
    """Write streams as a binary NTAG file."""
    channels, ticks, resolution = _merged(streams)
    records = np.zeros(len(ticks), dtype=RECORD_DTYPE)
    records["channel"] = channels
    records["ticks"] = ticks.astype(np.uint64)
    header = HEADER.pack(MAGIC, VERSION, 0, resolution_to_fs(resolution))
    _logger.info("writing %d events to %s", len(ticks), path)
    return write_bytes_atomic(path, header + records.tobytes())


def write_events_text(path: PathLike, streams: List[EventStream]) -> Path:
    """Write streams in the text interchange form, resolution line included."""
    channels, ticks, resolution = _merged(streams)
    lines = [f"{RESOLUTION_PREFIX}{resolution_to_fs(resolution)}"]
    lines.extend(f"{c},{t}" for c, t in zip(channels.tolist(), ticks.tolist()))
    return write_text_atomic(path, "\n".join(lines) + "\n")


def read_events(path: PathLike, resolution: Optional[float] = None) -> Tuple[EventStream, EventStream]:
    """
    Read an event file in either form; the binary form is recognised by its magic.

    resolution is required for text files that lack a resolution line.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FileParseError(f"cannot read event file: {exc}", path=str(path)) from exc
    if data[:4] == MAGIC:
        return _parse_binary(data, str(path))
    return _parse_text(data, str(path), resolution)


def _parse_binary(data: bytes, path: str) -> Tuple[EventStream, EventStream]:
    if len(data) < HEADER.size:
        raise FileParseError("truncated header", path=path, offset=len(data))
    magic, version, reserved, resolution_fs = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FileParseError("bad magic", path=path, offset=0)
    if version != VERSION:
        raise FileParseError(f"unsupported version {version}", path=path, offset=4)
    if resolution_fs == 0:
        raise FileParseError("zero tick resolution", path=path, offset=8)
    body = len(data) - HEADER.size
    if body % RECORD_DTYPE.itemsize:
        whole = body - body % RECORD_DTYPE.itemsize
        raise FileParseError("truncated record", path=path, offset=HEADER.size + whole)

    records = np.frombuffer(data, dtype=RECORD_DTYPE, offset=HEADER.size)
    bad = np.flatnonzero(~np.isin(records["channel"], CHANNELS))
    if len(bad):
        offset = HEADER.size + int(bad[0]) * RECORD_DTYPE.itemsize
        raise FileParseError(f"invalid channel {records['channel'][bad[0]]}", path=path, offset=offset)
    too_big = np.flatnonzero(records["ticks"] > np.iinfo(np.int64).max)
    if len(too_big):
        offset = HEADER.size + int(too_big[0]) * RECORD_DTYPE.itemsize + 4
        raise FileParseError("tick count exceeds the int64 range", path=path, offset=offset)

    _logger.debug("read %d binary event records from %s", len(records), path)
    return _split(records["channel"], records["ticks"].astype(np.int64), resolution_fs / FEMTO)


def _parse_text(data: bytes, path: str, resolution: Optional[float]) -> Tuple[EventStream, EventStream]:
    try:
        lines = data.decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise FileParseError("not UTF-8 text", path=path, offset=exc.start) from exc

    start = 0
    if lines and lines[0].startswith(RESOLUTION_PREFIX):
        try:
            resolution = int(lines[0][len(RESOLUTION_PREFIX):]) / FEMTO
        except ValueError as exc:
            raise FileParseError("bad resolution line", path=path, line=1) from exc
        start = 1
    if resolution is None or not resolution > 0:
        raise FileParseError("missing tick resolution", path=path, line=1)

    channels: List[int] = []
    ticks: List[int] = []
    for number, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            if len(fields) != 2:
                raise ValueError(f"expected 2 fields, got {len(fields)}")
            channel, tick = int(fields[0]), int(fields[1])
        except ValueError as exc:
            raise FileParseError(f"malformed record: {exc}", path=path, line=number) from exc
        if channel not in CHANNELS:
            raise FileParseError(f"invalid channel {channel}", path=path, line=number)
        if not 0 <= tick <= np.iinfo(np.int64).max:
            raise FileParseError(f"tick count {tick} out of range", path=path, line=number)
        channels.append(channel)
        ticks.append(tick)

    _logger.debug("read %d text event records from %s", len(ticks), path)
    return _split(np.array(channels, dtype=np.uint8), np.array(ticks, dtype=np.int64), resolution)
