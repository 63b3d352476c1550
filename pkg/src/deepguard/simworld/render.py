"""Pinhole camera over a flat road, rasterized row by row.

For a pixel row ``dv`` rows below the horizon the ground distance is
``z = focal * cam_height / dv`` and a lateral offset ``X`` lands at column
``cx + X * dv / cam_height``.
"""
from dataclasses import dataclass

import numpy as np

from .. import kernels


@dataclass(frozen=True)
class CameraConfig:
    height: int = 36
    width: int = 64
    horizon_row: int = 10
    cam_height: float = 0.19
    focal_px: float = 34.0
    line_half_width: float = 0.012
    line_value: float = 0.95
    center_value: float = 0.55
    dash_period: float = 0.3
    dash_duty: float = 0.5
    road_value: float = 0.45
    ground_value: float = 0.15
    sky_value: float = 0.30

    @property
    def shape(self):
        return (1, self.height, self.width)

    @property
    def cx(self):
        return (self.width - 1) / 2.0

    def ground_rows(self):
        """Row indices below the horizon with their (dv, depth)."""
        rows = np.arange(self.horizon_row, self.height)
        dv = rows - self.horizon_row + 0.5
        return rows, dv, self.focal_px * self.cam_height / dv


def render(track, state, camera=CameraConfig()):
    img = np.empty((camera.height, camera.width))
    img[: camera.horizon_row, :] = camera.sky_value
    img[camera.horizon_row:, :] = camera.ground_value
    rows, dv, z = camera.ground_rows()
    scale = dv / camera.cam_height  # pixels per lateral length unit
    shift = track.lateral_ahead(state.arc_position, z) - state.lateral_offset - state.heading_error * z
    center = camera.cx + shift * scale
    w = track.lane_half_width
    centers = np.stack([center - w * scale, center + w * scale, center], axis=1)
    hw = camera.line_half_width * scale
    phase = np.mod(state.arc_position + z, camera.dash_period)
    dash_on = phase < camera.dash_duty * camera.dash_period
    half_widths = np.stack([hw, hw, np.where(dash_on, hw, 0.0)], axis=1)
    values = np.array([camera.line_value, camera.line_value, camera.center_value])
    kernels.paint_rows(img, rows, centers, half_widths, values, center,
                       track.road_half_width * scale, camera.road_value)
    return img.reshape(camera.shape)
