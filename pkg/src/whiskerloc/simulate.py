"""Whole-contact simulation: one dab or whisk cycle against a rod.

Headless mode skips rendering and emits the deflection series directly,
with marker-position noise referenced to the (noisy) rest frame exactly as
the image pipeline would produce it. Rendered mode emits the frame stack
plus the noiseless ground truth for pipeline fidelity checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from whiskerloc.arrays import WhiskerArrayModel
from whiskerloc.contact import DeflectionState, RodStimulus, contact_deflection
from whiskerloc.motion import MotionProgram, self_motion_at
from whiskerloc.render import NoiseConfig, render_frame
from whiskerloc.series import DeflectionSeries, SeriesMeta


def draw_session_systematics(noise: NoiseConfig, rng: np.random.Generator):
    """Per-session (collection run or active trial) systematic draws.

    Returns (motion_scale, pose_offset_mm): the actuation scale applied to
    every contact of the session and the traverse registration offset of
    the whole session. Both persist within a session, which is what makes
    repeated runs genuinely different datasets.
    """
    scale = 1.0 + noise.motion_scale_sigma * rng.standard_normal()
    pose = noise.pose_sigma_mm * rng.standard_normal()
    return scale, pose


@dataclass
class ContactEvent:
    """Result of simulating one contact.

    ``truth_disp`` is the noiseless (frames, markers, 2) displacement.
    Headless events carry ``series`` (noisy, rest-referenced); rendered
    events carry ``frames`` instead.
    """

    truth_disp: np.ndarray
    states: list
    series: DeflectionSeries | None = None
    frames: np.ndarray | None = None


def simulate_deflection_states(
    model: WhiskerArrayModel,
    motion: MotionProgram,
    rod: RodStimulus | None,
    motion_scale: float = 1.0,
) -> list[DeflectionState]:
    """Noiseless per-frame deflection states over one motion cycle."""
    return [
        contact_deflection(model, self_motion_at(i, motion, motion_scale), rod)
        for i in range(motion.frames_per_contact)
    ]


def simulate_contact_event(
    model: WhiskerArrayModel,
    motion: MotionProgram,
    rod: RodStimulus | None,
    noise: NoiseConfig = NoiseConfig(),
    seed=0,
    motion_scale: float = 1.0,
    headless: bool = True,
    location_mm: float = 0.0,
) -> ContactEvent:
    """Simulate one full contact cycle; deterministic given the seed.

    ``motion_scale`` scales the commanded self-motion (whisk amplitude or
    dab depth) to model actuation variability between runs.
    """
    states = simulate_deflection_states(model, motion, rod, motion_scale)
    truth = np.stack([s.marker_disp_px for s in states])
    rng = np.random.default_rng(seed)
    meta = SeriesMeta(
        kind=model.config.kind,
        motion=motion.kind,
        location_mm=location_mm,
        calibrated=False,
        frame_rate_hz=motion.frame_rate_hz,
    )

    if headless:
        positions = model.marker_rest_px[None, :, :] + truth
        if noise.headless_sigma_px > 0:
            positions = positions + rng.normal(0.0, noise.headless_sigma_px, positions.shape)
        disp = positions - positions[0]
        disp[0] = 0.0
        series = DeflectionSeries(disp=disp, meta=meta)
        return ContactEvent(truth_disp=truth, states=states, series=series)

    frames = np.stack(
        [render_frame(state, model, rng, noise) for state in states]
    )
    return ContactEvent(truth_disp=truth, states=states, frames=frames)
