"""Frame-to-series processing: blob detection, identity tracking, assembly.

The pipeline turns a stack of marker frames into an ordered deflection
series: detect bright blobs in each frame, track identities from frame to
frame with greedy mutual nearest neighbours, and reference every tracked
position to the first (rest) frame. A lost or merged marker aborts the
series; the perception layer needs fixed dimensionality, so no silent
repair is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from whiskerloc.errors import SeriesAssemblyError, TrackingError
from whiskerloc.series import DeflectionSeries, SeriesMeta, subtract_series

_CONNECTIVITY = np.ones((3, 3), dtype=int)


@dataclass
class DetectionConfig:
    """Blob detection parameters.

    Pixels above threshold_frac * frame max form connected components;
    components lighter than min_mass (summed intensity) are dropped.
    """

    threshold_frac: float = 0.5
    min_mass: float = 5.0


@dataclass
class MarkerSet:
    """Unordered detected blobs: (x, y) centroids and per-blob mass."""

    centroids: np.ndarray
    masses: np.ndarray

    def __len__(self) -> int:
        return len(self.centroids)


def detect_markers(frame: np.ndarray, params: DetectionConfig = DetectionConfig()) -> MarkerSet:
    """Detect bright discs: threshold, label components, weighted centroids."""
    peak = frame.max() if frame.size else 0.0
    if peak <= 0:
        return MarkerSet(np.empty((0, 2)), np.empty(0))
    mask = frame >= params.threshold_frac * peak
    labels, n = ndimage.label(mask, structure=_CONNECTIVITY)
    if n == 0:
        return MarkerSet(np.empty((0, 2)), np.empty(0))
    idx = np.arange(1, n + 1)
    masses = ndimage.sum_labels(frame, labels, idx)
    cy = ndimage.sum_labels(frame * np.arange(frame.shape[0])[:, None], labels, idx) / masses
    cx = ndimage.sum_labels(frame * np.arange(frame.shape[1])[None, :], labels, idx) / masses
    keep = masses >= params.min_mass
    return MarkerSet(np.column_stack([cx[keep], cy[keep]]), masses[keep])


def track_markers(previous_ordered: np.ndarray, detected: MarkerSet):
    """Assign detections to previous identities by mutual nearest neighbours.

    Returns (ordered centroids, total assignment distance). Matching is
    greedy: repeatedly pair identities and detections that are each
    other's nearest among the unmatched. Raises TrackingError on a count
    mismatch or an exactly ambiguous assignment.
    """
    prev = np.asarray(previous_ordered, dtype=float)
    det = detected.centroids
    m = len(prev)
    if len(det) != m:
        raise TrackingError(
            f"count-mismatch: expected {m} markers, detected {len(det)}"
        )
    dist = np.sqrt(((prev[:, None, :] - det[None, :, :]) ** 2).sum(axis=2))

    ordered = np.empty_like(prev)
    total = 0.0
    prev_open = list(range(m))
    det_open = list(range(m))
    while prev_open:
        sub = dist[np.ix_(prev_open, det_open)]
        nearest_det = sub.argmin(axis=1)
        nearest_prev = sub.argmin(axis=0)
        matched = []
        for pi, dj in enumerate(nearest_det):
            if nearest_prev[dj] == pi:
                row = sub[:, dj]
                ties = np.flatnonzero(row == row[pi])
                if len(ties) > 1 and np.all(nearest_det[ties] == dj):
                    raise TrackingError(
                        "ambiguous-assignment: two identities equally near one detection"
                    )
                matched.append((pi, dj))
        if not matched:  # cannot happen: the closest open pair is mutual
            raise TrackingError("ambiguous-assignment: no mutual nearest pair")
        taken_p, taken_d = set(), set()
        for pi, dj in matched:
            if pi in taken_p or dj in taken_d:
                continue
            gp, gd = prev_open[pi], det_open[dj]
            ordered[gp] = det[gd]
            total += dist[gp, gd]
            taken_p.add(pi)
            taken_d.add(dj)
        prev_open = [p for i, p in enumerate(prev_open) if i not in taken_p]
        det_open = [d for j, d in enumerate(det_open) if j not in taken_d]
    return ordered, total


def assemble_series(
    frames,
    params: DetectionConfig = DetectionConfig(),
    meta: SeriesMeta | None = None,
) -> DeflectionSeries:
    """Detect and track through a frame stack; displacements vs frame 0.

    The first frame must be the contact-free rest frame; its detection
    order fixes the marker ordering for the whole series.
    """
    frames = list(frames)
    if not frames:
        raise SeriesAssemblyError("no frames to assemble")
    rest = detect_markers(frames[0], params)
    if len(rest) == 0:
        raise SeriesAssemblyError("frame 0: no markers detected in rest frame")
    rest_pos = rest.centroids
    disp = np.zeros((len(frames), len(rest), 2))
    current = rest_pos
    for i, frame in enumerate(frames[1:], start=1):
        detected = detect_markers(frame, params)
        try:
            current, _ = track_markers(current, detected)
        except TrackingError as exc:
            raise SeriesAssemblyError(f"frame {i}: {exc}") from exc
        disp[i] = current - rest_pos
    return DeflectionSeries(disp=disp, meta=meta or SeriesMeta())


def subtract_reference(series: DeflectionSeries, reference: DeflectionSeries) -> DeflectionSeries:
    """Remove the self-motion component by subtracting a reference series."""
    return subtract_series(series, reference)
