"""Pure-Python/numpy implementations of the hot kernels.

Scalar kernels (AR normal equations, incomplete gamma) follow the compiled
versions operation for operation so both backends round identically. Array
kernels are vectorized and agree with the compiled ones to ~1e-15.
"""
import math

import numpy as np

from .errors import NumericError

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 10000


def mean_sq_diff(a, b):
    d = np.ravel(a) - np.ravel(b)
    return float(np.dot(d, d) / d.size)


def ar_normal_solve(series, order, ridge):
    """Ridge least squares of x_t on (1, x_{t-1}..x_{t-order}).

    Returns [c, phi_1, ..., phi_order].
    """
    x = [float(v) for v in series]
    n = len(x)
    p = order + 1
    g = [[0.0] * p for _ in range(p)]
    r = [0.0] * p
    row = [0.0] * p
    for t in range(order, n):
        row[0] = 1.0
        for j in range(1, p):
            row[j] = x[t - j]
        y = x[t]
        for i in range(p):
            ri = row[i]
            r[i] += ri * y
            gi = g[i]
            for j in range(i + 1):
                gi[j] += ri * row[j]
    for i in range(1, p):
        g[i][i] += ridge
    # in-place Cholesky, lower triangle
    for j in range(p):
        s = g[j][j]
        for k in range(j):
            s -= g[j][k] * g[j][k]
        if not s > 0.0:
            raise NumericError("AR normal matrix is not positive definite")
        djj = math.sqrt(s)
        g[j][j] = djj
        for i in range(j + 1, p):
            s = g[i][j]
            for k in range(j):
                s -= g[i][k] * g[j][k]
            g[i][j] = s / djj
    z = [0.0] * p
    for i in range(p):
        s = r[i]
        for k in range(i):
            s -= g[i][k] * z[k]
        z[i] = s / g[i][i]
    beta = [0.0] * p
    for i in range(p - 1, -1, -1):
        s = z[i]
        for k in range(i + 1, p):
            s -= g[k][i] * beta[k]
        beta[i] = s / g[i][i]
    return np.array(beta)


def ar_iterate(beta, history, horizon):
    order = len(beta) - 1
    buf = [float(v) for v in history[len(history) - order:]] if order else []
    out = np.empty(horizon)
    for h in range(horizon):
        s = float(beta[0])
        m = len(buf)
        for j in range(1, order + 1):
            s += float(beta[j]) * buf[m - j]
        out[h] = s
        buf.append(s)
    return out


def gamma_p(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    if x <= 0.0:
        return 0.0
    lg = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        else:
            raise NumericError(f"gamma series did not converge (a={a}, x={x})")
        v = total * math.exp(lg)
        return 1.0 if v > 1.0 else v
    # modified Lentz continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise NumericError(f"gamma continued fraction did not converge (a={a}, x={x})")
    v = 1.0 - math.exp(lg) * h
    return 0.0 if v < 0.0 else v


def box_blur(img, radius):
    """Mean over the in-bounds (2r+1)^2 neighbourhood of each pixel, per channel."""
    img = np.asarray(img, dtype=np.float64)
    if radius <= 0:
        return img.copy()
    return _blur_axis(_blur_axis(img, radius, img.ndim - 1), radius, img.ndim - 2)


def _blur_axis(a, r, axis):
    a = np.moveaxis(a, axis, -1)
    n = a.shape[-1]
    c = np.concatenate([np.zeros(a.shape[:-1] + (1,)), np.cumsum(a, axis=-1)], axis=-1)
    idx = np.arange(n)
    lo = np.maximum(idx - r, 0)
    hi = np.minimum(idx + r, n - 1) + 1
    out = (c[..., hi] - c[..., lo]) / (hi - lo)
    return np.moveaxis(out, -1, axis)


def paint_rows(out, rows, centers, half_widths, values, road_center, road_half, road_value):
    """Rasterize the road wedge and anti-aliased lines into ``out`` (H x W).

    ``rows`` lists the image rows to paint; per-row arrays are aligned with it.
    ``centers``/``half_widths`` are (n_rows, n_lines) in pixel units, and a
    non-positive half width disables that line on that row.
    """
    w = out.shape[1]
    u = np.arange(w, dtype=np.float64)[None, :]
    rows = np.asarray(rows, dtype=np.intp)
    base = out[rows, :]
    cov = np.clip(road_half[:, None] + 0.5 - np.abs(u - road_center[:, None]), 0.0, 1.0)
    base = base + cov * (road_value - base)
    for k in range(centers.shape[1]):
        hw = half_widths[:, k][:, None]
        cov = np.clip(hw + 0.5 - np.abs(u - centers[:, k][:, None]), 0.0, 1.0)
        cov = np.where(hw > 0.0, cov, 0.0)
        base = base + cov * (values[k] - base)
    out[rows, :] = base
    return out
