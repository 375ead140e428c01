"""Self-motion programs: discrete dabs and rhythmic whisks.

A contact event spans exactly one motion cycle of ``frames_per_contact``
frames, with the cycle parameter u = frame / (frames_per_contact - 1)
running from 0 to 1 inclusive. Both waveforms are zero at u = 0 and u = 1,
so the first and last frames of an event carry no self-motion.

Whisk waveform: protraction is actuated (tendon-driven) and follows a
raised cosine over the first 60% of the cycle; retraction is passive
elastic reformation, modelled as an exponential relaxation with a time
constant of 15% of the cycle, rescaled to end exactly at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from whiskerloc.errors import InvalidConfigError

PROTRACTION_FRACTION = 0.6
RELAXATION_TAU = 0.15


@dataclass
class MotionProgram:
    """One contact's worth of self-motion.

    kind "dab": vertical down-up excursion of ``dab_depth_mm``.
    kind "whisk": protract to ``whisk_amplitude_deg`` and relax back.
    """

    kind: str
    dab_depth_mm: float = 15.0
    whisk_amplitude_deg: float = 34.0
    whisk_frequency_hz: float = 1.0
    frames_per_contact: int = 30
    frame_rate_hz: float = 30.0

    def __post_init__(self):
        if self.kind not in ("dab", "whisk"):
            raise InvalidConfigError(f"unknown motion kind {self.kind!r}")
        if self.frames_per_contact < 2:
            raise InvalidConfigError("frames_per_contact must be at least 2")
        if self.frame_rate_hz <= 0:
            raise InvalidConfigError("frame_rate_hz must be positive")
        if self.kind == "dab" and self.dab_depth_mm <= 0:
            raise InvalidConfigError("dab_depth_mm must be positive")
        if self.kind == "whisk":
            if self.whisk_amplitude_deg <= 0:
                raise InvalidConfigError("whisk_amplitude_deg must be positive")
            if self.whisk_frequency_hz <= 0:
                raise InvalidConfigError("whisk_frequency_hz must be positive")
            # one full cycle must fit the frame window
            cycle_frames = self.frame_rate_hz / self.whisk_frequency_hz
            if abs(cycle_frames - self.frames_per_contact) > 0.5:
                raise InvalidConfigError(
                    "frames_per_contact must span one whisk cycle "
                    f"(frame_rate/frequency = {cycle_frames:g}, got {self.frames_per_contact})"
                )


def dab_program(**overrides) -> MotionProgram:
    return MotionProgram(kind="dab", **overrides)


def whisk_program(**overrides) -> MotionProgram:
    return MotionProgram(kind="whisk", **overrides)


def cycle_u(frame_index: int, motion: MotionProgram) -> float:
    if not 0 <= frame_index < motion.frames_per_contact:
        raise ValueError(
            f"frame_index {frame_index} outside [0, {motion.frames_per_contact})"
        )
    return frame_index / (motion.frames_per_contact - 1)


def whisk_phase(frame_index: int, motion: MotionProgram) -> float:
    """Protraction fraction in [0, 1] at a frame of a whisk cycle.

    Zero at the first and last frames, exactly 1 once at the end of
    protraction (u = 0.6).
    """
    if motion.kind != "whisk":
        raise InvalidConfigError("whisk_phase requires a whisk motion program")
    u = cycle_u(frame_index, motion)
    if u <= PROTRACTION_FRACTION:
        return 0.5 * (1.0 - math.cos(math.pi * u / PROTRACTION_FRACTION))
    tail = math.exp(-(1.0 - PROTRACTION_FRACTION) / RELAXATION_TAU)
    return (math.exp(-(u - PROTRACTION_FRACTION) / RELAXATION_TAU) - tail) / (1.0 - tail)


def dab_depth_fraction(frame_index: int, motion: MotionProgram) -> float:
    """Descent fraction in [0, 1] of a dab cycle: raised-cosine down and up."""
    if motion.kind != "dab":
        raise InvalidConfigError("dab_depth_fraction requires a dab motion program")
    u = cycle_u(frame_index, motion)
    return 0.5 * (1.0 - math.cos(2.0 * math.pi * u))


@dataclass
class SelfMotionState:
    """Instantaneous self-motion pose of the array.

    ``protraction_rad`` rotates each whisker by row_sign * protraction from
    rest; ``descent_mm`` lowers the whole array toward the stimulus.
    """

    protraction_rad: float = 0.0
    descent_mm: float = 0.0


def self_motion_at(frame_index: int, motion: MotionProgram, scale: float = 1.0) -> SelfMotionState:
    """Self-motion pose at a frame. ``scale`` models cycle-to-cycle actuation
    variability (1.0 is the commanded motion)."""
    if motion.kind == "whisk":
        amplitude = math.radians(motion.whisk_amplitude_deg) * scale
        return SelfMotionState(
            protraction_rad=amplitude * whisk_phase(frame_index, motion)
        )
    return SelfMotionState(
        descent_mm=motion.dab_depth_mm * scale * dab_depth_fraction(frame_index, motion)
    )
