"""Weather and lighting corruptions applied to rendered frames."""
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import ConfigError, DomainError

ANOMALY_KINDS = ("fog", "rain", "snow", "night")

FOG_BLEND = 0.8
FOG_GREY = 0.5
RAIN_STREAKS = 400
RAIN_VALUE = 0.85
SNOW_FLAKES = 200
NIGHT_DIM = 0.9


@dataclass(frozen=True)
class AnomalySchedule:
    """Linear ramp from ``start_frame`` to ``peak_intensity`` over ``ramp_frames``.

    With ``hold_frames`` set, the peak is held that long and then ramps back
    down over ``ramp_frames``; otherwise it persists to the end of the episode.
    """

    kind: str
    start_frame: int
    ramp_frames: int
    peak_intensity: float
    hold_frames: int | None = None

    def __post_init__(self):
        if self.kind not in ANOMALY_KINDS:
            raise ConfigError(f"unknown anomaly kind {self.kind!r}")
        if not 0.0 <= self.peak_intensity <= 1.0:
            raise ConfigError("peak_intensity must lie in [0, 1]")
        if self.ramp_frames < 0 or self.start_frame < 0:
            raise ConfigError("start_frame and ramp_frames must be >= 0")
        if self.hold_frames is not None and self.hold_frames < 0:
            raise ConfigError("hold_frames must be >= 0")

    def intensity(self, frame_index):
        t = frame_index - self.start_frame
        if t < 0:
            return 0.0
        r = self.ramp_frames
        up = 1.0 if r == 0 else min(1.0, (t + 1) / r)
        if self.hold_frames is None:
            return self.peak_intensity * up
        t_down = t - r - self.hold_frames
        if t_down < 0:
            return self.peak_intensity * up
        if r == 0 or t_down >= r:
            return 0.0
        return self.peak_intensity * (1.0 - (t_down + 1) / r)


def inject_anomaly(frame, kind, intensity, rng):
    if not 0.0 <= intensity <= 1.0:
        raise DomainError(f"intensity {intensity} outside [0, 1]")
    if kind not in ANOMALY_KINDS:
        raise ConfigError(f"unknown anomaly kind {kind!r}")
    x = np.array(frame, dtype=np.float64)
    if intensity == 0.0:
        return x
    _, h, w = x.shape
    if kind == "fog":
        a = FOG_BLEND * intensity
        x = (1.0 - a) * x + a * FOG_GREY
        return kernels.box_blur(x, int(round(3 * intensity)))
    if kind == "night":
        return x * (1.0 - NIGHT_DIM * intensity)
    if kind == "rain":
        n = int(round(intensity * RAIN_STREAKS))
        rows = rng.integers(0, h, size=n)
        cols = rng.integers(0, w, size=n)
        for k in range(3):
            r, c = rows + k, cols + k
            ok = (r < h) & (c < w)
            x[:, r[ok], c[ok]] = RAIN_VALUE
        return x
    n = int(round(intensity * SNOW_FLAKES))
    rows = rng.integers(0, h, size=n)
    cols = rng.integers(0, w, size=n)
    x[:, rows, cols] = 1.0
    return x
