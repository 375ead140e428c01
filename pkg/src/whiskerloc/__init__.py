"""Simulated tactile whisker arrays and active rod localization.

The package covers the full chain: array geometry and whisking simulation,
marker-image processing into deflection time series, histogram-likelihood
location classification, and recursive-Bayes active localization, plus an
experiment harness (``whiskerloc.harness``) that runs the desk-scale
protocols end to end.
"""

from whiskerloc.arrays import WhiskerArrayConfig, WhiskerArrayModel, build_array
from whiskerloc.contact import DeflectionState, RodStimulus, contact_deflection
from whiskerloc.motion import MotionProgram, SelfMotionState, whisk_phase
from whiskerloc.render import NoiseConfig, render_frame
from whiskerloc.series import DeflectionSeries, SeriesMeta, read_series, write_series
from whiskerloc.simulate import ContactEvent, simulate_contact_event

__version__ = "0.1.0"

__all__ = [
    "WhiskerArrayConfig",
    "WhiskerArrayModel",
    "build_array",
    "RodStimulus",
    "DeflectionState",
    "contact_deflection",
    "MotionProgram",
    "SelfMotionState",
    "whisk_phase",
    "NoiseConfig",
    "render_frame",
    "DeflectionSeries",
    "SeriesMeta",
    "read_series",
    "write_series",
    "ContactEvent",
    "simulate_contact_event",
    "__version__",
]
