"""Parse Intel-Berkeley-style sensor logs and resample onto a uniform grid.

Input rows are ``date time epoch moteid temperature humidity light voltage``,
whitespace or comma delimited, one record per line. Field logs are dirty, so
malformed rows are counted and skipped rather than fatal.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Sequence

from .model import Reading, SensorKind, TwinfuseError, UniformTrace


class EmptyInputError(TwinfuseError):
    """No parseable rows were found for the requested mote and channel."""


class UnknownChannelError(TwinfuseError):
    """The requested channel is not one of the four sensed quantities."""


_CHANNEL_FIELD = {
    SensorKind.TEMPERATURE: "temperature",
    SensorKind.HUMIDITY: "humidity",
    SensorKind.LIGHT: "light",
    SensorKind.VOLTAGE: "voltage",
}


@dataclass(frozen=True)
class RawRecord:
    """One log row: real-seconds timestamp, mote id, optional channel values."""

    timestamp: float
    mote_id: int
    temperature: float | None = None
    humidity: float | None = None
    light: float | None = None
    voltage: float | None = None

    def channel(self, kind: SensorKind) -> float | None:
        return getattr(self, _CHANNEL_FIELD[kind])


@dataclass(frozen=True)
class ParseResult:
    """Time-sorted (timestamp, value) pairs plus a count of skipped rows."""

    pairs: tuple[tuple[float, float], ...]
    skipped: int


def _row_timestamp(date_token: str, time_token: str) -> float:
    dt = datetime.fromisoformat(f"{date_token} {time_token}")
    return dt.replace(tzinfo=timezone.utc).timestamp()


def _optional_float(tokens: list[str], idx: int) -> float | None:
    if idx >= len(tokens):
        return None
    try:
        return float(tokens[idx])
    except ValueError:
        return None


def parse_row(line: str) -> RawRecord | None:
    """Parse one log row; None when the row is malformed.

    A row needs a timestamp, a mote id, and at least one channel value.
    """
    tokens = line.replace(",", " ").split()
    if len(tokens) < 5:
        return None
    try:
        timestamp = _row_timestamp(tokens[0], tokens[1])
        mote_id = int(tokens[3])
    except ValueError:
        return None
    record = RawRecord(
        timestamp=timestamp,
        mote_id=mote_id,
        temperature=_optional_float(tokens, 4),
        humidity=_optional_float(tokens, 5),
        light=_optional_float(tokens, 6),
        voltage=_optional_float(tokens, 7),
    )
    if all(record.channel(k) is None for k in _CHANNEL_FIELD):
        return None
    return record


def parse_log(
    lines: Iterable[str] | IO[str], mote_id: int, channel: SensorKind
) -> ParseResult:
    """Extract one mote's channel from a raw log.

    Duplicate timestamps keep the last occurrence in file order. Rows that
    cannot be parsed, or that lack the requested field, are skipped and
    counted.
    """
    if channel not in _CHANNEL_FIELD:
        raise UnknownChannelError(f"unknown channel {channel!r}")

    by_time: dict[float, float] = {}
    skipped = 0
    for line in lines:
        if not line.strip():
            continue
        record = parse_row(line)
        if record is None:
            skipped += 1
            continue
        if record.mote_id != mote_id:
            continue
        value = record.channel(channel)
        if value is None:
            skipped += 1
            continue
        by_time[record.timestamp] = value

    if not by_time:
        raise EmptyInputError(
            f"no parseable rows for mote {mote_id} channel {channel.value}"
        )
    pairs = tuple(sorted(by_time.items()))
    return ParseResult(pairs, skipped)


def resample(
    pairs: Sequence[tuple[float, float]],
    start: int,
    interval_s: int,
    length: int,
    policy: str = "locf",
    sensor_id: str = "resampled",
    kind: SensorKind = SensorKind.SYNTHETIC,
) -> UniformTrace:
    """Project irregular observations onto a uniform grid.

    ``locf`` assigns each grid point the latest observation at or before it;
    ``linear`` interpolates between bracketing observations and carries the
    last value beyond the final one. Grid points before the first observation
    are marked not-present.
    """
    if policy not in ("locf", "linear"):
        raise ValueError(f"unknown resample policy {policy!r}")
    if interval_s <= 0:
        raise ValueError("interval_s must be positive")
    if length < 1:
        raise ValueError("length must be >= 1")

    readings: list[Reading] = []
    j = 0  # index of the first observation strictly after the grid point
    n_obs = len(pairs)
    for i in range(length):
        t = start + i * interval_s
        while j < n_obs and pairs[j][0] <= t:
            j += 1
        if j == 0:
            readings.append(Reading.absent())
            continue
        t0, v0 = pairs[j - 1]
        if policy == "locf" or j == n_obs:
            readings.append(Reading.of(v0))
        else:
            t1, v1 = pairs[j]
            frac = (t - t0) / (t1 - t0)
            readings.append(Reading.of(v0 + frac * (v1 - v0)))
    return UniformTrace(sensor_id, kind, start, interval_s, tuple(readings))
