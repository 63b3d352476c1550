"""The driving stack under test: lane-line perception and a PD lane keeper."""
from dataclasses import dataclass

import numpy as np

from ..guard import Actuation
from .render import CameraConfig


@dataclass(frozen=True)
class LaneEstimate:
    lateral_offset_est: float
    confidence: float


@dataclass(frozen=True)
class PerceptionConfig:
    percentile: float = 90.0
    # bright pixels must also stand this far above the median of the search region
    min_contrast: float = 0.15
    band_tolerance_px: float = 2.5


def perceive(frame, lane_half_width, camera=CameraConfig(), config=PerceptionConfig()):
    """Estimate the lateral offset from lane-line pixels in the bottom third.

    Each bright pixel is mapped back to a lateral ground coordinate; pixels are
    split into a left and a right line by the overall centroid, and the offset
    is minus the midpoint of the two line centroids. Confidence is the fraction
    of bright pixels lying within the column band around their line centroid.
    """
    img = np.asarray(frame, dtype=np.float64).reshape(camera.height, camera.width)
    top = max(camera.height - camera.height // 3, camera.horizon_row + 1)
    region = img[top:]
    thr = np.percentile(region, config.percentile)
    bright = (region >= thr) & (region - np.median(region) >= config.min_contrast)
    r_idx, c_idx = np.nonzero(bright)
    if r_idx.size == 0:
        return LaneEstimate(0.0, 0.0)
    dv = (r_idx + top) - camera.horizon_row + 0.5
    lateral = (c_idx - camera.cx) * camera.cam_height / dv
    tol = config.band_tolerance_px * camera.cam_height / dv
    mid = lateral.mean()
    left = lateral < mid
    right = ~left
    if left.any() and right.any():
        cl, cr = lateral[left].mean(), lateral[right].mean()
        offset = -0.5 * (cl + cr)
        in_band = np.where(left, np.abs(lateral - cl), np.abs(lateral - cr)) <= tol
    else:
        # a single visible line: assume it is the nearer one
        c = lateral.mean()
        offset = -(c - np.sign(c) * lane_half_width) if c != 0 else 0.0
        in_band = np.abs(lateral - c) <= tol
    return LaneEstimate(float(offset), float(in_band.mean()))


@dataclass(frozen=True)
class ControllerConfig:
    k_p: float = 4.0
    k_d: float = 0.3
    target_speed: float = 0.30
    speed_gain: float = 4.0


@dataclass(frozen=True)
class ControllerState:
    prev_offset_est: float | None = None


def controller(estimate, state, config=ControllerConfig(), memory=ControllerState(), dt=1.0 / 12.0):
    """PD steering on the offset estimate plus proportional speed tracking.

    ``state`` is the vehicle state (only its speed is read); ``memory`` keeps
    the previous estimate for the derivative term. Returns (Actuation, memory').
    """
    e = estimate.lateral_offset_est
    rate = 0.0 if memory.prev_offset_est is None else (e - memory.prev_offset_est) / dt
    steering = float(np.clip(-config.k_p * e - config.k_d * rate, -1.0, 1.0))
    err = config.target_speed - state.speed
    throttle = float(np.clip(config.speed_gain * err, 0.0, 1.0))
    brake = float(np.clip(-config.speed_gain * err, 0.0, 1.0))
    return Actuation(steering, throttle, brake, config.target_speed), ControllerState(e)
