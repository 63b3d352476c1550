import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

TRACK_KINDS = ("straight", "circle", "s-curve")


@dataclass(frozen=True)
class Track:
    """Centerline with signed curvature; positive curvature bends right (+d side).

    ``curvature_scale`` is the circle's curvature or the s-curve's peak
    curvature; ``period`` is the s-curve wavelength.
    """

    kind: str = "straight"
    length: float = 100.0
    lane_half_width: float = 0.15
    road_half_width: float = 0.30
    curvature_scale: float = 0.6
    period: float = 8.0

    def __post_init__(self):
        if self.kind not in TRACK_KINDS:
            raise ConfigError(f"unknown track kind {self.kind!r}")
        if not 0 < self.lane_half_width < self.road_half_width:
            raise ConfigError("need 0 < lane_half_width < road_half_width")
        if not self.length > 0:
            raise ConfigError("track length must be positive")

    @classmethod
    def standard(cls, kind):
        if kind == "circle":
            r = 1.6
            return cls("circle", length=2 * math.pi * r, curvature_scale=1.0 / r)
        if kind == "s-curve":
            return cls("s-curve", length=16.0, curvature_scale=0.6, period=8.0)
        return cls(kind)

    def curvature(self, s):
        if self.kind == "straight":
            return 0.0
        if self.kind == "circle":
            return self.curvature_scale
        return self.curvature_scale * math.sin(2 * math.pi * s / self.period)

    def lateral_ahead(self, s, z):
        """Lateral displacement of the centerline ``z`` ahead of arc position ``s``.

        Small-angle integral of the curvature profile, evaluated per element of ``z``.
        """
        if self.kind == "straight":
            return np.zeros_like(z)
        if self.kind == "circle":
            return 0.5 * self.curvature_scale * z * z
        w = 2 * math.pi / self.period
        a = self.curvature_scale / w
        # theta(u) = a (cos(ws) - cos(w(s+u))); y(z) = integral of theta
        return a * (z * math.cos(w * s) - (np.sin(w * (s + z)) - math.sin(w * s)) / w)

    def wrap(self, s):
        return s % self.length
