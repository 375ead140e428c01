"""Whisker array geometry.

Sensor frame conventions used throughout the simulator:

* x: traverse axis (mm), the axis along which rod location is classified.
* y: along-row axis (mm), parallel to the rod axis.
* z: outward normal of the tip surface (mm); whiskers extend toward +z.

Whiskers are straight tapered shafts that pivot rigidly about their base in
the x-z plane. A whisker orientation is the angle from +z toward +x, so the
shaft point at arc length s is (bx + s*sin(theta), by, s*cos(theta)).

The dynamic array has two rows mirrored about x = 0. At rest each row is
splayed outward; protraction rotates both rows toward the midline so the
tips meet at full amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from whiskerloc.errors import InvalidConfigError

STATIC_ROW_PATTERN = (5, 4, 3, 4, 5)
HEX_ROW_SPACING_FACTOR = np.sqrt(3.0) / 2.0


def hexagonal_layout(pitch_mm: float) -> np.ndarray:
    """21-site hexagonal-projection layout, mirror symmetric in x and y.

    Rows of 5/4/3/4/5 sites, each row centred on x = 0, with the half-pitch
    stagger of a hexagonal packing and row spacing pitch * sqrt(3)/2.
    """
    dy = pitch_mm * HEX_ROW_SPACING_FACTOR
    points = []
    n_rows = len(STATIC_ROW_PATTERN)
    for row, count in enumerate(STATIC_ROW_PATTERN):
        y = (row - (n_rows - 1) / 2.0) * dy
        for k in range(count):
            x = (k - (count - 1) / 2.0) * pitch_mm
            points.append((x, y))
    return np.asarray(points, dtype=float)


def two_row_layout(row_gap_mm: float, pitch_mm: float, per_row: int = 5) -> np.ndarray:
    """Two bilaterally symmetric rows of whiskers at x = +-row_gap/2."""
    ys = (np.arange(per_row) - (per_row - 1) / 2.0) * pitch_mm
    left = np.column_stack([np.full(per_row, -row_gap_mm / 2.0), ys])
    right = np.column_stack([np.full(per_row, row_gap_mm / 2.0), ys])
    return np.vstack([left, right])


@dataclass
class WhiskerArrayConfig:
    """Geometry of a whisker array tip and its camera image.

    ``rest_splay_deg`` is the outward tilt of each row at rest (dynamic
    arrays only; static whiskers stand normal to the tip). ``pin_length_mm``
    is the lever arm converting base rotation into marker travel.
    """

    kind: str
    whisker_count: int
    base_positions_mm: np.ndarray
    whisker_length_mm: float = 40.0
    base_diameter_mm: float = 0.98
    tip_diameter_mm: float = 0.60
    pin_pitch_mm: float = 4.5
    image_width_px: int = 640
    image_height_px: int = 480
    pixels_per_mm: float = 10.0
    marker_radius_px: float = 4.0
    pin_length_mm: float = 3.5
    rest_splay_deg: float = 0.0

    def __post_init__(self):
        self.base_positions_mm = np.asarray(self.base_positions_mm, dtype=float)


def static_array_config(**overrides) -> WhiskerArrayConfig:
    """Default 21-whisker static tip: hexagonal layout at 4.5 mm pitch."""
    cfg = dict(
        kind="static",
        whisker_count=21,
        base_positions_mm=hexagonal_layout(4.5),
        rest_splay_deg=0.0,
    )
    cfg.update(overrides)
    return WhiskerArrayConfig(**cfg)


def dynamic_array_config(**overrides) -> WhiskerArrayConfig:
    """Default whisking tip: 2 mirror-symmetric rows of 5, splayed 25 deg."""
    cfg = dict(
        kind="dynamic",
        whisker_count=10,
        base_positions_mm=two_row_layout(12.0, 4.5),
        rest_splay_deg=25.0,
    )
    cfg.update(overrides)
    return WhiskerArrayConfig(**cfg)


@dataclass
class WhiskerArrayModel:
    """A validated array with derived per-whisker quantities.

    ``row_signs`` gives the protraction direction of each whisker (+1 for
    the left row sweeping toward +x, -1 mirrored, 0 for static whiskers).
    Marker rest positions are the base positions projected into the image
    at ``pixels_per_mm`` about the image centre.
    """

    config: WhiskerArrayConfig
    rest_angles_rad: np.ndarray = field(repr=False, default=None)
    row_signs: np.ndarray = field(repr=False, default=None)
    marker_rest_px: np.ndarray = field(repr=False, default=None)

    @property
    def n_whiskers(self) -> int:
        return self.config.whisker_count

    @property
    def marker_gain_px(self) -> float:
        """Pixels of marker travel per unit tan(base deflection)."""
        return self.config.pin_length_mm * self.config.pixels_per_mm

    def nominal_angles(self, protraction_rad: float) -> np.ndarray:
        """Per-whisker shaft angle under a commanded protraction rotation."""
        return self.rest_angles_rad + self.row_signs * protraction_rad


def build_array(config: WhiskerArrayConfig) -> WhiskerArrayModel:
    """Validate a config and derive the array model.

    Deterministic: the same config always yields an identical model.
    Raises InvalidConfigError naming the first violated invariant.
    """
    if config.kind not in ("static", "dynamic"):
        raise InvalidConfigError(f"unknown array kind {config.kind!r}")
    if config.whisker_count <= 0:
        raise InvalidConfigError("whisker_count must be a positive integer")
    pos = config.base_positions_mm
    if pos.ndim != 2 or pos.shape != (config.whisker_count, 2):
        raise InvalidConfigError(
            f"base_positions_mm must have shape ({config.whisker_count}, 2), got {pos.shape}"
        )
    if config.whisker_length_mm <= 0:
        raise InvalidConfigError("whisker_length_mm must be positive")
    if not (config.base_diameter_mm >= config.tip_diameter_mm > 0):
        raise InvalidConfigError("need base_diameter >= tip_diameter > 0")
    if config.pixels_per_mm <= 0:
        raise InvalidConfigError("pixels_per_mm must be positive")
    if config.marker_radius_px <= 0:
        raise InvalidConfigError("marker_radius_px must be positive")
    if config.pin_length_mm <= 0:
        raise InvalidConfigError("pin_length_mm must be positive")
    diffs = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    if dist.min() < 1e-9:
        raise InvalidConfigError("base positions must be distinct")
    if not (0.0 <= config.rest_splay_deg < 90.0):
        raise InvalidConfigError("rest_splay_deg must lie in [0, 90)")
    if config.kind == "static" and config.rest_splay_deg != 0.0:
        raise InvalidConfigError("static arrays have no rest splay")

    row_signs = -np.sign(pos[:, 0]) if config.kind == "dynamic" else np.zeros(len(pos))
    if config.kind == "dynamic" and np.any(row_signs == 0):
        raise InvalidConfigError("dynamic whiskers must sit off the x midline")
    splay = np.deg2rad(config.rest_splay_deg)
    rest_angles = np.sign(pos[:, 0]) * splay

    centre = np.array(
        [(config.image_width_px - 1) / 2.0, (config.image_height_px - 1) / 2.0]
    )
    marker_rest = centre + pos * config.pixels_per_mm
    margin = config.marker_radius_px + 2.0
    if (
        marker_rest[:, 0].min() < margin
        or marker_rest[:, 0].max() > config.image_width_px - 1 - margin
        or marker_rest[:, 1].min() < margin
        or marker_rest[:, 1].max() > config.image_height_px - 1 - margin
    ):
        raise InvalidConfigError("marker rest positions fall outside the image bounds")

    return WhiskerArrayModel(
        config=config,
        rest_angles_rad=rest_angles,
        row_signs=row_signs,
        marker_rest_px=marker_rest,
    )
