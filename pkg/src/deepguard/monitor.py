"""Streaming monitor: reconstruction error, AR filtering and forecasting, verdicts."""
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .autoencoder import forward
from .errors import ConfigError, DimensionError
from .guard import classify_level
from .timeseries import fit_ar, forecast

TRIGGERS = ("none", "current", "forecast")


def recon_error(x, x_hat):
    """Mean pixel-wise squared error over all channels, rows and columns."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x_hat, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        raise DimensionError("empty frame")
    return kernels.mean_sq_diff(a, b)


@dataclass(frozen=True)
class MonitorConfig:
    order: int = 3
    window: int = 30
    horizon: int = 6

    def __post_init__(self):
        if self.order < 1 or self.horizon < 0:
            raise ConfigError("AR order must be >= 1 and horizon >= 0")
        if self.window < 2 * self.order + 1:
            raise ConfigError("AR window must be at least 2*order + 1")


@dataclass(frozen=True)
class MonitorVerdict:
    frame_index: int
    raw_error: float
    filtered_error: float
    forecast_max: float
    anomalous: bool
    trigger: str
    level: str
    ar_params: tuple | None = None  # (c, phi_1..phi_m) when the window is full

    def as_dict(self):
        return {
            "frame_index": self.frame_index,
            "raw_error": self.raw_error,
            "filtered_error": self.filtered_error,
            "forecast_max": self.forecast_max,
            "anomalous": self.anomalous,
            "trigger": self.trigger,
            "level": self.level,
            "ar_params": list(self.ar_params) if self.ar_params is not None else None,
        }


@dataclass(frozen=True)
class MonitorState:
    model: object
    threshold: object  # calibration.ThresholdConfig
    config: MonitorConfig = MonitorConfig()
    history: tuple = ()
    frame_index: int = 0

    def __post_init__(self):
        if self.model is None or self.threshold is None:
            raise ConfigError("monitor needs a trained model and a threshold config")


def observe_error(state, error):
    """Advance the monitor by one raw error value.

    The filtered error is the one-step AR forecast from the window that ends
    at the previous frame (or the raw error itself while the window fills);
    ``forecast_max`` is the peak of the H-step forecast continuing from the
    current frame.
    """
    cfg = state.config
    e = float(error)
    hist = state.history
    ar_params = None
    if len(hist) >= cfg.window:
        window = np.array(hist[-cfg.window:])
        ar = fit_ar(window, cfg.order)
        filtered = float(forecast(ar, window, 1)[0])
        ahead = forecast(ar, np.append(window, e), cfg.horizon)
        fmax = float(ahead.max()) if ahead.size else 0.0
        ar_params = (ar.intercept,) + ar.coefficients
    else:
        filtered = e
        fmax = 0.0
    theta = state.threshold.theta
    if filtered > theta:
        trigger, level = "current", classify_level(filtered, state.threshold)
    elif fmax > theta:
        trigger, level = "forecast", classify_level(fmax, state.threshold)
    else:
        trigger, level = "none", "none"
    verdict = MonitorVerdict(state.frame_index, e, filtered, fmax, trigger != "none",
                             trigger, level, ar_params)
    new_hist = (hist + (e,))[-cfg.window:]
    return replace(state, history=new_hist, frame_index=state.frame_index + 1), verdict


def monitor_step(state, frame):
    x = np.asarray(frame, dtype=np.float64)
    if x.size != state.model.n_inputs:
        raise DimensionError(f"frame has {x.size} values, monitor expects {state.model.n_inputs}")
    return observe_error(state, recon_error(x, forward(state.model, x)))
