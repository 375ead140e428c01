"""Quasi-static rod contact for rigid pivoting whiskers.

The rod is a cylinder whose axis runs along y (perpendicular to both the
traverse axis and the whisker rest direction), so all contact geometry
lives in the x-z plane: the rod is the circle of radius diameter/2 centred
at (x_position, center_depth - descent).

A whisker at nominal angle theta_n (rest + self-motion) is in contact when
its shaft segment penetrates that circle. The contact response is the
smallest rigid rotation about the base that leaves the shaft grazing the
rod surface; ties between the two graze directions resolve to zero
deflection. This is stateless and frictionless: a whisker swept past the
rod centre pops to the far tangent, a crude stand-in for slipping over the
stimulus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from whiskerloc.arrays import WhiskerArrayModel
from whiskerloc.errors import InvalidConfigError
from whiskerloc.motion import SelfMotionState

ROD_AXIS_Y = (0.0, 1.0, 0.0)


@dataclass
class RodStimulus:
    """A rod at ``x_position_mm`` along the traverse axis (sensor frame).

    ``center_depth_mm`` is the depth of the rod axis below the tip surface
    at zero descent. Only the crossbar orientation (axis along y) is
    supported.
    """

    x_position_mm: float
    diameter_mm: float = 5.0
    center_depth_mm: float = 39.0
    axis: tuple = ROD_AXIS_Y

    def __post_init__(self):
        if self.diameter_mm <= 0:
            raise InvalidConfigError("rod diameter must be positive")
        ax = np.asarray(self.axis, dtype=float)
        if ax.shape != (3,) or abs(abs(ax[1]) - 1.0) > 1e-9 or np.hypot(ax[0], ax[2]) > 1e-9:
            raise InvalidConfigError("only a rod axis along y is supported")

    @property
    def radius_mm(self) -> float:
        return self.diameter_mm / 2.0


@dataclass
class DeflectionState:
    """Per-whisker angles and marker displacements for one instant.

    ``deflection_rad`` is the total angle from rest (self-motion plus
    contact); ``contact_rad`` is the contact part alone. Marker
    displacement follows the pin lever: gain * (tan(actual) - tan(rest))
    along x, zero along y.
    """

    angles_rad: np.ndarray
    contact_rad: np.ndarray
    deflection_rad: np.ndarray
    marker_disp_px: np.ndarray
    engaged: np.ndarray

    @property
    def n_whiskers(self) -> int:
        return len(self.angles_rad)


def _graze_angles(dist, beta, radius, length):
    """Both graze angles (beta -/+ offset) for penetrating whiskers.

    Uses the line-tangency angle when the tangency point lies within the
    shaft, otherwise the tip-on-circle angle. Inputs are arrays filtered to
    penetrating whiskers with dist > radius.
    """
    t_tan_sq = dist**2 - radius**2
    t_tan = np.sqrt(t_tan_sq)
    offset = np.empty_like(dist)
    line_case = t_tan <= length
    offset[line_case] = np.arcsin(radius / dist[line_case])
    tip_case = ~line_case
    if np.any(tip_case):
        cosarg = (dist[tip_case] ** 2 + length**2 - radius**2) / (
            2.0 * length * dist[tip_case]
        )
        offset[tip_case] = np.arccos(np.clip(cosarg, -1.0, 1.0))
    return beta - offset, beta + offset


def contact_deflection(
    model: WhiskerArrayModel,
    motion_state: SelfMotionState,
    rod: RodStimulus | None,
) -> DeflectionState:
    """Resolve rod contact for every whisker at a self-motion pose.

    Deterministic and purely geometric. With no rod (or no intersection)
    the contact deflection is zero and the state carries self-motion only.
    """
    theta_n = model.nominal_angles(motion_state.protraction_rad)
    n = model.n_whiskers
    contact = np.zeros(n)
    engaged = np.zeros(n, dtype=bool)

    if rod is not None:
        length = model.config.whisker_length_mm
        radius = rod.radius_mm
        bx = model.config.base_positions_mm[:, 0]
        vx = rod.x_position_mm - bx
        vz = np.full(n, rod.center_depth_mm - motion_state.descent_mm)
        dist = np.hypot(vx, vz)

        sin_t, cos_t = np.sin(theta_n), np.cos(theta_n)
        proj = vx * sin_t + vz * cos_t
        t_star = np.clip(proj, 0.0, length)
        seg_dist_sq = dist**2 - 2.0 * t_star * proj + t_star**2
        # base must sit outside the rod; coincident geometry resolves to zero
        mask = (seg_dist_sq < radius**2) & (dist > radius)

        if np.any(mask):
            beta = np.arctan2(vx[mask], vz[mask])
            lo, hi = _graze_angles(dist[mask], beta, radius, length)
            d_lo = lo - theta_n[mask]
            d_hi = hi - theta_n[mask]
            pick_lo = np.abs(d_lo) < np.abs(d_hi)
            delta = np.where(pick_lo, d_lo, d_hi)
            delta[np.abs(d_lo) == np.abs(d_hi)] = 0.0
            contact[mask] = delta
            engaged[mask] = True

    theta_a = theta_n + contact
    deflection = theta_a - model.rest_angles_rad
    disp = np.zeros((n, 2))
    disp[:, 0] = model.marker_gain_px * (np.tan(theta_a) - np.tan(model.rest_angles_rad))
    return DeflectionState(
        angles_rad=theta_a,
        contact_rad=contact,
        deflection_rad=deflection,
        marker_disp_px=disp,
        engaged=engaged,
    )
