"""Autoregressive model of the reconstruction-error stream.

x_t = c + phi_1 x_{t-1} + ... + phi_m x_{t-m} + noise, fitted by ridge least
squares (penalty on the phi's only) through the normal equations.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, DataError

RIDGE = 1e-6


@dataclass(frozen=True)
class ARModel:
    order: int
    intercept: float
    coefficients: tuple
    fit_window: int

    def __post_init__(self):
        if self.order < 1 or len(self.coefficients) != self.order:
            raise ConfigError("coefficient count must equal the order (>= 1)")
        if not all(math.isfinite(v) for v in (self.intercept, *self.coefficients)):
            raise DataError("AR parameters must be finite")

    @property
    def beta(self):
        return np.array((self.intercept,) + tuple(self.coefficients))


def fit_ar(series, order, ridge=RIDGE):
    if order < 1:
        raise ConfigError("AR order must be >= 1")
    x = np.ascontiguousarray(series, dtype=np.float64).ravel()
    if x.size < 2 * order + 1:
        raise DataError(f"series of length {x.size} too short for order {order}")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    beta = kernels.ar_normal_solve(x, order, ridge)
    return ARModel(order, float(beta[0]), tuple(float(b) for b in beta[1:]), int(x.size))


def forecast(model, history, horizon):
    """Iterate the recursion with zero noise, feeding predictions back in."""
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    h = np.ascontiguousarray(history, dtype=np.float64).ravel()
    if h.size < model.order:
        raise DataError(f"need {model.order} history values, got {h.size}")
    if horizon == 0:
        return np.empty(0)
    return kernels.ar_iterate(model.beta, h[h.size - model.order:], horizon)


def one_step_residuals(model, series):
    """In-sample one-step prediction errors over every valid t."""
    x = np.asarray(series, dtype=np.float64)
    m = model.order
    pred = np.full(x.size - m, model.intercept)
    for j, phi in enumerate(model.coefficients, start=1):
        pred += phi * x[m - j:x.size - j]
    return x[m:] - pred
