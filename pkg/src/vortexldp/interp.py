"""Local interpolation used by the kernel tables.

2-D interpolation is periodic cubic B-spline (prefiltered, C^2, exact on
cubics) on the uniform M x M grid; 1-D radial profiles use Catmull-Rom
on dense uniform tables with even reflection at the left edge.
"""

import numpy as np


def bspline2_prefilter(values):
    """B-spline coefficients for periodic cubic interpolation of `values`."""
    values = np.asarray(values, float)
    m0, m1 = values.shape
    f0 = (4.0 + 2.0 * np.cos(2.0 * np.pi * np.fft.fftfreq(m0))) / 6.0
    f1 = (4.0 + 2.0 * np.cos(2.0 * np.pi * np.fft.fftfreq(m1))) / 6.0
    vhat = np.fft.fft2(values) / (f0[:, None] * f1[None, :])
    return np.real(np.fft.ifft2(vhat))


def _bspline_weights(t):
    t2 = t * t
    t3 = t2 * t
    w0 = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0
    w1 = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0
    w2 = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0
    w3 = t3 / 6.0
    return w0, w1, w2, w3


def bspline2_eval(coeffs, u, v):
    """Evaluate the periodic spline at fractional grid indices (u, v)."""
    m0, m1 = coeffs.shape
    u = np.asarray(u, float) % m0
    v = np.asarray(v, float) % m1
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    wu = _bspline_weights(u - iu)
    wv = _bspline_weights(v - iv)
    out = np.zeros(np.broadcast(u, v).shape, float)
    for a in range(4):
        ia = (iu + a - 1) % m0
        row = np.zeros_like(out)
        for b in range(4):
            ib = (iv + b - 1) % m1
            row += wv[b] * coeffs[ia, ib]
        out += wu[a] * row
    return out


class RadialTable:
    """Dense uniform table of a radial profile on [0, xmax].

    Catmull-Rom evaluation with even reflection at 0; queries beyond
    xmax return `tail` (profiles here vanish beyond their support).
    """

    def __init__(self, xmax, values, tail=0.0):
        self.xmax = float(xmax)
        self.values = np.asarray(values, float)
        self.n = len(self.values)
        self.h = self.xmax / (self.n - 1)
        self.tail = float(tail)

    def __call__(self, x):
        x = np.abs(np.asarray(x, float))
        f = self.values
        u = np.clip(x, 0.0, self.xmax) / self.h
        i = np.minimum(u.astype(np.int64), self.n - 2)
        t = u - i
        im1 = np.abs(i - 1)                      # even reflection at 0
        ip2 = np.minimum(i + 2, self.n - 1)
        p0, p1, p2, p3 = f[im1], f[i], f[i + 1], f[ip2]
        out = p1 + 0.5 * t * (
            p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3
                           + t * (3.0 * (p1 - p2) + p3 - p0))
        )
        return np.where(x > self.xmax, self.tail, out)
