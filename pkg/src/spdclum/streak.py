"""Streak image container, regions of interest, and the CSV exchange format.

The CSV layout is the contract between synthesis, analysis, and the command
line tool:

    # streak-image/v1
    # seed = 42
    # exposure = 1000000
    # model_hash = <sha256 of the emission model fingerprint>
    <wavelength centers, comma separated>
    <time center>,<counts per wavelength bin...>
    ...

'#'-prefixed lines of the form ``# key = value`` are metadata; other comment
lines are ignored.  The first data row holds the wavelength bin centers, every
following row starts with its time bin center.  Writing is deterministic:
identical images serialize to identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class StreakParseError(Exception):
    """Malformed streak CSV; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _format_float(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True, eq=False)
class StreakImage:
    """Wavelength-time histogram of photon counts.

    counts has shape (n_time, n_wavelength); both axes store bin centers and
    increase strictly.  metadata carries flat string pairs (seed, exposure,
    model hash, warnings) and survives the CSV round trip.
    """

    counts: np.ndarray
    wavelength_axis_nm: np.ndarray
    time_axis_ns: np.ndarray
    exposure: int
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ValueError("counts must be a 2-d array")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.floor(counts)):
                raise ValueError("counts must be integers")
            counts = counts.astype(np.int64)
        if counts.min(initial=0) < 0:
            raise ValueError("counts must be nonnegative")
        wl = np.asarray(self.wavelength_axis_nm, dtype=float)
        t = np.asarray(self.time_axis_ns, dtype=float)
        if counts.shape != (t.size, wl.size):
            raise ValueError(
                f"counts shape {counts.shape} does not match axes "
                f"({t.size} times, {wl.size} wavelengths)")
        for name, axis in (("wavelength", wl), ("time", t)):
            if axis.size < 2 or np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} axis must be strictly increasing "
                                 "with at least two bins")
        if int(self.exposure) < 1:
            raise ValueError("exposure must be at least one pulse")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "wavelength_axis_nm", wl)
        object.__setattr__(self, "time_axis_ns", t)
        object.__setattr__(self, "exposure", int(self.exposure))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def total_counts(self) -> int:
        return int(self.counts.sum())

    def wavelength_binwidth(self) -> float:
        return float(np.median(np.diff(self.wavelength_axis_nm)))

    def time_binwidth(self) -> float:
        return float(np.median(np.diff(self.time_axis_ns)))


@dataclass(frozen=True)
class RegionOfInterest:
    """Rectangle in (wavelength, time); bounds are inclusive on bin centers."""

    wavelength_nm: tuple[float, float]
    time_ns: tuple[float, float]
    label: str = "custom"

    def __post_init__(self):
        wlo, whi = self.wavelength_nm
        tlo, thi = self.time_ns
        if whi < wlo:
            raise ValueError(f"inverted wavelength range ({wlo}, {whi})")
        if thi < tlo:
            raise ValueError(f"inverted time range ({tlo}, {thi})")
        object.__setattr__(self, "wavelength_nm", (float(wlo), float(whi)))
        object.__setattr__(self, "time_ns", (float(tlo), float(thi)))


def write_streak_csv(image: StreakImage, path) -> None:
    """Serialize an image; byte-identical output for identical images."""
    lines = ["# streak-image/v1"]
    lines.append(f"# exposure = {image.exposure}")
    for key in sorted(image.metadata):
        lines.append(f"# {key} = {image.metadata[key]}")
    lines.append(",".join(_format_float(x) for x in image.wavelength_axis_nm))
    for i, t in enumerate(image.time_axis_ns):
        row = [_format_float(t)]
        row.extend(str(int(c)) for c in image.counts[i])
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_trace_csv(path, time_ns, values, metadata=None,
                    value_column: str = "counts") -> None:
    """Serialize a 1-d time trace (``# decay-trace/v1`` header).

    Same metadata conventions as the streak format; one ``time_ns,<value>``
    row per bin.  Deterministic bytes.
    """
    time_ns = np.asarray(time_ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if time_ns.shape != values.shape or time_ns.ndim != 1:
        raise ValueError("time and value arrays must be equal-length 1-d")
    lines = ["# decay-trace/v1"]
    if metadata:
        for key in sorted(metadata):
            lines.append(f"# {key} = {metadata[key]}")
    lines.append(f"time_ns,{value_column}")
    for t, v in zip(time_ns, values):
        lines.append(f"{_format_float(t)},{_format_float(v)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(path):
    """Parse a trace CSV -> (time_ns, values, metadata).

    Accepts an optional ``time_ns,...`` header row; values may be floats.
    Malformed rows raise StreakParseError with the line number.
    """
    metadata: dict[str, str] = {}
    times: list[float] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    if key.strip():
                        metadata[key.strip()] = value.strip()
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise StreakParseError(
                    f"expected 2 fields, got {len(fields)}", lineno)
            if not times and not values:
                try:
                    float(fields[0])
                except ValueError:
                    continue  # header row
            try:
                times.append(float(fields[0]))
                values.append(float(fields[1]))
            except ValueError as exc:
                raise StreakParseError(f"bad trace row: {exc}",
                                       lineno) from None
    if not times:
        raise StreakParseError("no trace data found")
    return np.array(times), np.array(values), metadata


def read_streak_csv(path) -> StreakImage:
    """Parse a streak CSV; malformed content raises StreakParseError with a
    line number."""
    metadata: dict[str, str] = {}
    wavelengths: np.ndarray | None = None
    times: list[float] = []
    rows: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    if key.strip():
                        metadata[key.strip()] = value.strip()
                continue
            fields = line.split(",")
            if wavelengths is None:
                try:
                    wavelengths = np.array([float(f) for f in fields])
                except ValueError as exc:
                    raise StreakParseError(f"bad wavelength header: {exc}",
                                           lineno) from None
                continue
            if len(fields) != wavelengths.size + 1:
                raise StreakParseError(
                    f"expected {wavelengths.size + 1} fields, got {len(fields)}",
                    lineno)
            try:
                times.append(float(fields[0]))
            except ValueError:
                raise StreakParseError(f"bad time value {fields[0]!r}",
                                       lineno) from None
            try:
                rows.append([int(f) for f in fields[1:]])
            except ValueError:
                raise StreakParseError("counts must be integers", lineno) from None
            if min(rows[-1]) < 0:
                raise StreakParseError("counts must be nonnegative", lineno)
    if wavelengths is None or not rows:
        raise StreakParseError("no image data found")
    exposure = metadata.pop("exposure", None)
    if exposure is None:
        raise StreakParseError("missing '# exposure = N' metadata")
    try:
        exposure_n = int(exposure)
    except ValueError:
        raise StreakParseError(f"bad exposure value {exposure!r}") from None
    try:
        return StreakImage(np.array(rows, dtype=np.int64), wavelengths,
                           np.array(times), exposure_n, metadata)
    except ValueError as exc:
        raise StreakParseError(str(exc)) from None
