# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Mirrors deepguard._pykernels function for function."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, exp, lgamma, fabs

from .errors import NumericError

cnp.import_array()

cdef double _EPS = 1e-16
cdef double _FPMIN = 1e-300
cdef int _MAX_ITER = 10000


def mean_sq_diff(a, b):
    cdef const double[::1] x = np.ascontiguousarray(a, dtype=np.float64).ravel()
    cdef const double[::1] y = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0, d
    if y.shape[0] != n:
        raise ValueError("length mismatch")
    for i in range(n):
        d = x[i] - y[i]
        s += d * d
    return s / n


def ar_normal_solve(series, int order, double ridge):
    cdef const double[::1] x = np.ascontiguousarray(series, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef int p = order + 1
    cdef double[:, ::1] g = np.zeros((p, p))
    cdef double[::1] r = np.zeros(p)
    cdef double[::1] row = np.zeros(p)
    cdef double[::1] z = np.zeros(p)
    beta_arr = np.zeros(p)
    cdef double[::1] beta = beta_arr
    cdef Py_ssize_t t
    cdef int i, j, k
    cdef double y, ri, s, djj
    for t in range(order, n):
        row[0] = 1.0
        for j in range(1, p):
            row[j] = x[t - j]
        y = x[t]
        for i in range(p):
            ri = row[i]
            r[i] += ri * y
            for j in range(i + 1):
                g[i, j] += ri * row[j]
    for i in range(1, p):
        g[i, i] += ridge
    for j in range(p):
        s = g[j, j]
        for k in range(j):
            s -= g[j, k] * g[j, k]
        if not s > 0.0:
            raise NumericError("AR normal matrix is not positive definite")
        djj = sqrt(s)
        g[j, j] = djj
        for i in range(j + 1, p):
            s = g[i, j]
            for k in range(j):
                s -= g[i, k] * g[j, k]
            g[i, j] = s / djj
    for i in range(p):
        s = r[i]
        for k in range(i):
            s -= g[i, k] * z[k]
        z[i] = s / g[i, i]
    for i in range(p - 1, -1, -1):
        s = z[i]
        for k in range(i + 1, p):
            s -= g[k, i] * beta[k]
        beta[i] = s / g[i, i]
    return beta_arr


def ar_iterate(beta_in, history, int horizon):
    cdef const double[::1] beta = np.ascontiguousarray(beta_in, dtype=np.float64)
    cdef const double[::1] hist = np.ascontiguousarray(history, dtype=np.float64)
    cdef int order = beta.shape[0] - 1
    cdef Py_ssize_t nh = hist.shape[0]
    cdef double[::1] buf = np.zeros(order + horizon)
    out_arr = np.empty(horizon)
    cdef double[::1] out = out_arr
    cdef int h, j, m
    cdef double s
    for j in range(order):
        buf[j] = hist[nh - order + j]
    for h in range(horizon):
        m = order + h
        s = beta[0]
        for j in range(1, order + 1):
            s += beta[j] * buf[m - j]
        out[h] = s
        buf[m] = s
    return out_arr


def gamma_p(double a, double x):
    cdef double lg, ap, term, total, v, b, c, d, h, an, delta
    cdef int i
    if x <= 0.0:
        return 0.0
    lg = a * log(x) - x - lgamma(a)
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for i in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if fabs(term) < fabs(total) * _EPS:
                break
        else:
            raise NumericError(f"gamma series did not converge (a={a}, x={x})")
        v = total * exp(lg)
        return 1.0 if v > 1.0 else v
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if fabs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < _EPS:
            break
    else:
        raise NumericError(f"gamma continued fraction did not converge (a={a}, x={x})")
    v = 1.0 - exp(lg) * h
    return 0.0 if v < 0.0 else v


cdef void _blur_line(double* src, double* dst, double* csum, Py_ssize_t n,
                     Py_ssize_t stride, int r) nogil:
    cdef Py_ssize_t i, lo, hi
    csum[0] = 0.0
    for i in range(n):
        csum[i + 1] = csum[i] + src[i * stride]
    for i in range(n):
        lo = i - r
        if lo < 0:
            lo = 0
        hi = i + r
        if hi > n - 1:
            hi = n - 1
        hi += 1
        dst[i * stride] = (csum[hi] - csum[lo]) / (hi - lo)


def box_blur(img, int radius):
    src = np.ascontiguousarray(img, dtype=np.float64)
    if radius <= 0:
        return src.copy()
    shape = src.shape
    cdef double[:, :, ::1] a = src.reshape((-1,) + shape[-2:])
    cdef Py_ssize_t nc = a.shape[0], nh = a.shape[1], nw = a.shape[2]
    tmp = np.empty((nc, nh, nw))
    out = np.empty((nc, nh, nw))
    cdef double[:, :, ::1] t = tmp
    cdef double[:, :, ::1] o = out
    cdef double[::1] csum = np.empty(max(nh, nw) + 1)
    cdef Py_ssize_t ch, i, j
    for ch in range(nc):
        for i in range(nh):
            _blur_line(&a[ch, i, 0], &t[ch, i, 0], &csum[0], nw, 1, radius)
        for j in range(nw):
            _blur_line(&t[ch, 0, j], &o[ch, 0, j], &csum[0], nh, nw, radius)
    return out.reshape(shape)


def paint_rows(double[:, ::1] out, rows, centers, half_widths, values,
               road_center, road_half, double road_value):
    cdef const Py_ssize_t[::1] rr = np.ascontiguousarray(rows, dtype=np.intp)
    cdef const double[:, ::1] cen = np.ascontiguousarray(centers, dtype=np.float64)
    cdef const double[:, ::1] hws = np.ascontiguousarray(half_widths, dtype=np.float64)
    cdef const double[::1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] rc = np.ascontiguousarray(road_center, dtype=np.float64)
    cdef const double[::1] rh = np.ascontiguousarray(road_half, dtype=np.float64)
    cdef Py_ssize_t n = rr.shape[0], w = out.shape[1], nl = cen.shape[1]
    cdef Py_ssize_t i, c, k, r
    cdef double base, cov, u, hw
    for i in range(n):
        r = rr[i]
        for c in range(w):
            u = <double>c
            base = out[r, c]
            cov = rh[i] + 0.5 - fabs(u - rc[i])
            cov = 0.0 if cov < 0.0 else (1.0 if cov > 1.0 else cov)
            base = base + cov * (road_value - base)
            for k in range(nl):
                hw = hws[i, k]
                if hw > 0.0:
                    cov = hw + 0.5 - fabs(u - cen[i, k])
                    cov = 0.0 if cov < 0.0 else (1.0 if cov > 1.0 else cov)
                else:
                    cov = 0.0
                base = base + cov * (vals[k] - base)
            out[r, c] = base
    return np.asarray(out)
