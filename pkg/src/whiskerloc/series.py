"""Deflection time series and their on-disk format.

A series holds per-frame, per-marker (x, y) displacements in pixels
relative to the first (rest) frame, so frame 0 is identically zero and the
marker ordering is fixed across frames.

File format: a single header line of comma-separated key=value metadata
(kind, motion, location_mm, frames, markers, calibrated, frame_rate_hz),
then one line per frame: frame_index followed by x and y displacement for
each marker in order, comma separated, 8 significant digits.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from whiskerloc.errors import SeriesFormatError, ShapeMismatchError

_REQUIRED_KEYS = ("kind", "motion", "location_mm", "frames", "markers", "calibrated")
_HEADER_KEYS = _REQUIRED_KEYS + ("frame_rate_hz",)


@dataclass
class SeriesMeta:
    kind: str = "unknown"
    motion: str = "unknown"
    location_mm: float = 0.0
    calibrated: bool = False
    frame_rate_hz: float = 30.0


@dataclass
class DeflectionSeries:
    """Ordered (frames, markers, 2) displacement array plus metadata."""

    disp: np.ndarray
    meta: SeriesMeta

    def __post_init__(self):
        self.disp = np.asarray(self.disp, dtype=float)
        if self.disp.ndim != 3 or self.disp.shape[2] != 2:
            raise ShapeMismatchError(
                f"series data must be (frames, markers, 2), got {self.disp.shape}"
            )
        if self.disp.shape[0] < 1:
            raise ShapeMismatchError("series needs at least one frame")
        if np.any(self.disp[0] != 0.0):
            raise ShapeMismatchError("frame 0 must be the zero rest frame")

    @property
    def n_frames(self) -> int:
        return self.disp.shape[0]

    @property
    def n_markers(self) -> int:
        return self.disp.shape[1]

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(self.n_frames) / self.meta.frame_rate_hz

    def values(self) -> np.ndarray:
        """Flattened (sensor_dims, frames) view: dims are m0x, m0y, m1x, ..."""
        return self.disp.reshape(self.n_frames, -1).T


def subtract_series(series: DeflectionSeries, reference: DeflectionSeries) -> DeflectionSeries:
    if series.disp.shape != reference.disp.shape:
        raise ShapeMismatchError(
            f"shape mismatch: {series.disp.shape} vs {reference.disp.shape}"
        )
    meta = replace(series.meta, calibrated=True)
    return DeflectionSeries(disp=series.disp - reference.disp, meta=meta)


def _format_header(series: DeflectionSeries) -> str:
    m = series.meta
    return (
        f"kind={m.kind},motion={m.motion},location_mm={m.location_mm:.8g},"
        f"frames={series.n_frames},markers={series.n_markers},"
        f"calibrated={int(m.calibrated)},frame_rate_hz={m.frame_rate_hz:.8g}"
    )


def dump_series(series: DeflectionSeries) -> str:
    out = io.StringIO()
    out.write(_format_header(series) + "\n")
    flat = series.disp.reshape(series.n_frames, -1)
    for i in range(series.n_frames):
        row = ",".join(f"{v:.8g}" for v in flat[i])
        out.write(f"{i},{row}\n")
    return out.getvalue()


def write_series(path, series: DeflectionSeries) -> None:
    with open(path, "w") as fh:
        fh.write(dump_series(series))


def _parse_header(line: str) -> dict:
    fields = {}
    for part in line.strip().split(","):
        if "=" not in part:
            raise SeriesFormatError(f"malformed header item {part!r}")
        key, value = part.split("=", 1)
        if key not in _HEADER_KEYS:
            raise SeriesFormatError(f"unknown header key {key!r}")
        if key in fields:
            raise SeriesFormatError(f"duplicate header key {key!r}")
        fields[key] = value
    missing = [k for k in _REQUIRED_KEYS if k not in fields]
    if missing:
        raise SeriesFormatError(f"header missing keys: {', '.join(missing)}")
    return fields


def load_series(text: str) -> DeflectionSeries:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SeriesFormatError("empty series file")
    fields = _parse_header(lines[0])
    try:
        n_frames = int(fields["frames"])
        n_markers = int(fields["markers"])
        meta = SeriesMeta(
            kind=fields["kind"],
            motion=fields["motion"],
            location_mm=float(fields["location_mm"]),
            calibrated=bool(int(fields["calibrated"])),
            frame_rate_hz=float(fields.get("frame_rate_hz", 30.0)),
        )
    except ValueError as exc:
        raise SeriesFormatError(f"bad header value: {exc}") from exc

    if len(lines) - 1 != n_frames:
        raise SeriesFormatError(
            f"expected {n_frames} frame rows, found {len(lines) - 1}"
        )
    disp = np.empty((n_frames, n_markers, 2))
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != 1 + 2 * n_markers:
            raise SeriesFormatError(
                f"row {i}: expected {1 + 2 * n_markers} fields, found {len(parts)}"
            )
        try:
            idx = int(parts[0])
            vals = np.array([float(p) for p in parts[1:]])
        except ValueError as exc:
            raise SeriesFormatError(f"row {i}: {exc}") from exc
        if idx != i:
            raise SeriesFormatError(f"row {i}: frame index {idx} out of order")
        disp[i] = vals.reshape(n_markers, 2)
    try:
        return DeflectionSeries(disp=disp, meta=meta)
    except ShapeMismatchError as exc:
        raise SeriesFormatError(str(exc)) from exc


def read_series(path) -> DeflectionSeries:
    with open(path) as fh:
        return load_series(fh.read())
