"""Deterministic seed derivation.

Every random draw in the harness comes from a generator derived from the
root seed and a structured integer key (stream id plus indices), so any
run, trial, or sample can be reproduced in isolation and parallel
execution cannot change results. Streams:

    COLLECT    (COLLECT, experiment_id, run) and per-series children
    REFERENCE  (REFERENCE, experiment_id, run, repeat)
    MC         (MC, experiment_id)
    PROBE      (PROBE, experiment_id, condition, trial)
    SHOWCASE   (SHOWCASE, experiment_id, trial)
"""

from __future__ import annotations

import numpy as np

STREAM_COLLECT = 0
STREAM_REFERENCE = 1
STREAM_MC = 2
STREAM_PROBE = 3
STREAM_SHOWCASE = 4

EXPERIMENT_IDS = {
    "static_dab": 0,
    "dynamic_whisk": 1,
    "dynamic_whisk_calibrated": 2,
}


def seed_key(root_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in key))


def derive_rng(root_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(seed_key(root_seed, *key))
