"""Synthetic marker-frame rendering.

Frames are float64 grayscale grids with dark (0.0) background and bright
(peak 1.0) anti-aliased marker discs, one per whisker pin. Noise is
additive zero-mean Gaussian per pixel plus optional per-marker position
jitter, both drawn from a seeded generator so rendering is bit-for-bit
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from whiskerloc.arrays import WhiskerArrayModel
from whiskerloc.contact import DeflectionState
from whiskerloc.errors import MarkerOutOfBoundsError


@dataclass
class NoiseConfig:
    """Noise injected into simulated data.

    pixel_sigma: additive Gaussian pixel noise as a fraction of peak
        intensity (rendered frames).
    marker_jitter_px: per-frame marker position jitter (rendered frames).
    headless_sigma_px: per-frame marker position noise applied to
        headless-emitted series (rest-frame referenced, like the pipeline).
    motion_scale_sigma: relative sigma of the actuation scale, drawn once
        per collection run or active trial; models motor amplitude
        variability between sessions.
    pose_sigma_mm: sigma of the traverse registration offset, drawn once
        per collection run or active trial; models rig remount error
        between sessions and is the main reason repeated runs disagree.
    """

    pixel_sigma: float = 0.01
    marker_jitter_px: float = 0.1
    headless_sigma_px: float = 0.05
    motion_scale_sigma: float = 0.01
    pose_sigma_mm: float = 0.4

    def __post_init__(self):
        fields = (
            "pixel_sigma",
            "marker_jitter_px",
            "headless_sigma_px",
            "motion_scale_sigma",
            "pose_sigma_mm",
        )
        for name in fields:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


NO_NOISE = NoiseConfig(0.0, 0.0, 0.0, 0.0, 0.0)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def draw_markers(width: int, height: int, centers: np.ndarray, radius: float) -> np.ndarray:
    """Render anti-aliased unit-intensity discs at ``centers`` (x, y)."""
    frame = np.zeros((height, width))
    margin = radius + 1.0
    if (
        centers[:, 0].min() < margin
        or centers[:, 0].max() > width - 1 - margin
        or centers[:, 1].min() < margin
        or centers[:, 1].max() > height - 1 - margin
    ):
        raise MarkerOutOfBoundsError("displaced marker leaves the image bounds")
    for cx, cy in centers:
        x0, x1 = int(np.floor(cx - radius - 1)), int(np.ceil(cx + radius + 1)) + 1
        y0, y1 = int(np.floor(cy - radius - 1)), int(np.ceil(cy + radius + 1)) + 1
        ys, xs = np.mgrid[y0:y1, x0:x1]
        d = np.hypot(xs - cx, ys - cy)
        patch = np.clip(radius + 0.5 - d, 0.0, 1.0)
        np.maximum(frame[y0:y1, x0:x1], patch, out=frame[y0:y1, x0:x1])
    return frame


def render_frame(
    state: DeflectionState,
    model: WhiskerArrayModel,
    noise_seed,
    noise: NoiseConfig = NoiseConfig(),
) -> np.ndarray:
    """Render one frame of the array under a deflection state.

    ``noise_seed`` may be an integer seed or a Generator; passing the same
    seed with the same state yields a bit-identical frame.
    """
    rng = _as_rng(noise_seed)
    cfg = model.config
    centers = model.marker_rest_px + state.marker_disp_px
    if noise.marker_jitter_px > 0:
        centers = centers + rng.normal(0.0, noise.marker_jitter_px, centers.shape)
    frame = draw_markers(cfg.image_width_px, cfg.image_height_px, centers, cfg.marker_radius_px)
    if noise.pixel_sigma > 0:
        frame += rng.normal(0.0, noise.pixel_sigma, frame.shape)
    return frame
