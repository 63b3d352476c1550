"""Gamma fit of nominal reconstruction errors and the derived alarm threshold.

The threshold is the Gamma quantile at ``1 - false_alarm_rate``. Guard bands
either come from further quantiles of the same fit (``calibrated`` mode) or
are the fixed absolute constants 0.05 / 0.059 / 0.069 (``fixed`` mode).
"""
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import CalibrationError, ConfigError, DomainError, ParseError

FIXED_BANDS = (0.05, 0.059, 0.069)
FIXED_WARN_FLOOR = 0.055
BAND_QUANTILES = (0.99, 0.999)
MODES = ("calibrated", "fixed")

NEWTON_MAX_ITER = 50
MIN_SAMPLES = 10

# asymptotic-series coefficients, valid once the argument is >= 6
_DIGAMMA_SERIES = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 5 / 660, -691 / 32760, 1 / 12)
_TRIGAMMA_SERIES = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6)


def digamma(x):
    if not x > 0:
        raise DomainError(f"digamma needs x > 0, got {x}")
    acc = 0.0
    while x < 6.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    p = inv2
    for c in _DIGAMMA_SERIES:
        tail += c * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - tail


def trigamma(x):
    if not x > 0:
        raise DomainError(f"trigamma needs x > 0, got {x}")
    acc = 0.0
    while x < 6.0:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    tail = 0.0
    p = inv2 * inv
    for c in _TRIGAMMA_SERIES:
        tail += c * p
        p *= inv2
    return acc + inv + 0.5 * inv2 + tail


@dataclass(frozen=True)
class GammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (math.isfinite(self.shape) and math.isfinite(self.scale)
                and self.shape > 0 and self.scale > 0):
            raise CalibrationError(f"invalid gamma parameters {self}")

    @property
    def mean(self):
        return self.shape * self.scale


@dataclass(frozen=True)
class GammaFit:
    params: GammaParams
    estimator: str  # "mle" or "moments"
    iterations: int


def _check_samples(samples):
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < MIN_SAMPLES:
        raise CalibrationError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise CalibrationError("samples must be finite and strictly positive")
    if not x.var() > 0:
        raise CalibrationError("samples have zero variance")
    return x


def moment_estimates(samples):
    """Method of moments (population variance): shape = mean^2/var, scale = var/mean."""
    x = _check_samples(samples)
    m, v = float(x.mean()), float(x.var())
    return GammaParams(m * m / v, v / m)


def gamma_log_likelihood(params, samples):
    x = np.asarray(samples, dtype=np.float64)
    k, s = params.shape, params.scale
    return float(np.sum((k - 1) * np.log(x) - x / s) - x.size * (math.lgamma(k) + k * math.log(s)))


def fit_gamma(samples):
    """Maximum-likelihood Gamma fit.

    Newton iteration on ln k - digamma(k) = ln(mean) - mean(ln x), started at
    the moment estimate; falls back to the moment estimate if Newton has not
    converged within 50 iterations.
    """
    x = _check_samples(samples)
    mean = float(x.mean())
    target = math.log(mean) - float(np.mean(np.log(x)))
    start = moment_estimates(x)
    k = start.shape
    if target > 0:
        for it in range(1, NEWTON_MAX_ITER + 1):
            f = math.log(k) - digamma(k) - target
            fp = 1.0 / k - trigamma(k)
            step = f / fp
            k_new = k - step
            while k_new <= 0:
                # overshoot below zero: halve toward the origin instead
                step *= 0.5
                k_new = k - step
            converged = abs(k_new - k) <= 1e-12 * k_new
            k = k_new
            if converged and math.isfinite(k):
                return GammaFit(GammaParams(k, mean / k), "mle", it)
            if not math.isfinite(k):
                break
    return GammaFit(start, "moments", NEWTON_MAX_ITER)


def gamma_cdf(params, x):
    if x < 0:
        raise DomainError(f"gamma_cdf needs x >= 0, got {x}")
    return kernels.gamma_p(params.shape, x / params.scale)


def gamma_pdf(params, x):
    if x <= 0:
        return 0.0 if params.shape >= 1 or x < 0 else math.inf
    k, s = params.shape, params.scale
    return math.exp((k - 1) * math.log(x / s) - x / s - math.lgamma(k)) / s


def gamma_inverse_cdf(params, q):
    """Quantile function: bracket, bisect to a narrow interval, then safeguarded Newton."""
    if not 0.0 <= q < 1.0:
        raise DomainError(f"quantile level must lie in [0, 1), got {q}")
    if q == 0.0:
        return 0.0
    lo, hi = 0.0, max(params.mean, params.scale)
    while gamma_cdf(params, hi) < q:
        lo, hi = hi, 2.0 * hi
        if not math.isfinite(hi):
            raise DomainError(f"could not bracket quantile {q}")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gamma_cdf(params, mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-3 * hi:
            break
    x = 0.5 * (lo + hi)
    # relative in q so deep left-tail quantiles still resolve x
    tol = 1e-14 * q
    for _ in range(100):
        err = gamma_cdf(params, x) - q
        if err < 0:
            lo = x
        else:
            hi = x
        if abs(err) <= tol or hi - lo <= 4e-16 * hi:
            break
        dens = gamma_pdf(params, x)
        x_new = x - err / dens if dens > 0 else 0.5 * (lo + hi)
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
    return x


@dataclass(frozen=True)
class ThresholdConfig:
    false_alarm_rate: float
    theta: float
    band1: float
    band2: float
    level1_floor: float | None = None
    warn_floor: float | None = None

    def __post_init__(self):
        if not 0.0 < self.false_alarm_rate < 1.0:
            raise ConfigError("false_alarm_rate must lie in (0, 1)")
        if not (self.theta > 0 and self.theta <= self.band1 < self.band2):
            raise ConfigError(f"need 0 < theta <= band1 < band2, got {self}")
        if self.level1_floor is None:
            object.__setattr__(self, "level1_floor", self.theta)
        if self.warn_floor is None:
            object.__setattr__(self, "warn_floor", 0.5 * (self.theta + self.band1))

    @classmethod
    def fixed(cls, false_alarm_rate=0.05):
        t, b1, b2 = FIXED_BANDS
        return cls(false_alarm_rate, t, b1, b2, level1_floor=t, warn_floor=FIXED_WARN_FLOOR)


@dataclass(frozen=True)
class Calibration:
    fit: GammaFit
    threshold: ThresholdConfig
    mode: str
    n_samples: int

    def report(self):
        t = self.threshold
        return {
            "shape": self.fit.params.shape,
            "scale": self.fit.params.scale,
            "estimator": self.fit.estimator,
            "false_alarm_rate": t.false_alarm_rate,
            "theta": t.theta,
            "band1": t.band1,
            "band2": t.band2,
            "level1_floor": t.level1_floor,
            "warn_floor": t.warn_floor,
            "mode": self.mode,
            "n_samples": self.n_samples,
        }


def estimate_threshold(nominal_errors, false_alarm_rate=0.05, mode="calibrated"):
    if mode not in MODES:
        raise ConfigError(f"unknown calibration mode {mode!r}")
    if not 0.0 < false_alarm_rate < 1.0:
        raise DomainError("false_alarm_rate must lie in (0, 1)")
    x = _check_samples(nominal_errors)
    fit = fit_gamma(x)
    if mode == "fixed":
        cfg = ThresholdConfig.fixed(false_alarm_rate)
    else:
        p = fit.params
        theta = gamma_inverse_cdf(p, 1.0 - false_alarm_rate)
        q1, q2 = BAND_QUANTILES
        b1 = max(gamma_inverse_cdf(p, q1), theta)
        b2 = gamma_inverse_cdf(p, q2)
        if not b2 > b1:
            b2 = b1 * (1.0 + 1e-9) + 1e-300
        cfg = ThresholdConfig(false_alarm_rate, theta, b1, b2)
    return Calibration(fit, cfg, mode, int(x.size))


def save_calibration(cal, path):
    Path(path).write_text(json.dumps(cal.report(), indent=2, sort_keys=True) + "\n")


def load_calibration(path):
    try:
        doc = json.loads(Path(path).read_text())
        fit = GammaFit(GammaParams(float(doc["shape"]), float(doc["scale"])), doc["estimator"], 0)
        cfg = ThresholdConfig(
            float(doc["false_alarm_rate"]), float(doc["theta"]), float(doc["band1"]),
            float(doc["band2"]), doc.get("level1_floor"), doc.get("warn_floor"),
        )
        return Calibration(fit, cfg, doc["mode"], int(doc["n_samples"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed calibration report {path}: {exc}") from exc


__all__ = [
    "GammaParams", "GammaFit", "ThresholdConfig", "Calibration", "digamma", "trigamma",
    "fit_gamma", "moment_estimates", "gamma_cdf", "gamma_pdf", "gamma_inverse_cdf",
    "gamma_log_likelihood", "estimate_threshold", "save_calibration", "load_calibration",
    "FIXED_BANDS",
]
