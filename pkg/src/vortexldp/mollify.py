"""Mollifier family zeta_n, its self-convolution G_n, and mollified kernels.

zeta(r) = C exp(-1/(1-4r^2)) on r < 1/2, normalized to unit mass in 2-D;
zeta_n(x) = m_n^2 zeta(m_n |x|) with the schedule m_n = ceil(5 n^0.4).
G_n = zeta_n * zeta_n scales the same way off a single profile G on [0, 1].

Mollified kernels come from the exact radial-average identities: with
a = m_n r, g(a) = int_a^1 sG ds and Lambda(a) = int_a^1 sG(s) log(s/a) ds,

    (G_n*N)(x) = N(x) + c2/m_n^2 - Lambda(a),   c2 = (pi/2) int s^3 G,
    (G_n*K)(x) = K(x) + (x2, -x1)/|x|^2 * g(a),

both exact (Lambda = g = 0 for a >= 1, so G_n*K = K beyond the bump).
"""

import math

import numpy as np

from .constants import ZETA_NORM_C
from .interp import RadialTable
from .torus import GridField, wrap

PROFILE_SAMPLES = 4097


def zeta_profile(s):
    """Unit-scale profile zeta(s), vanishing for |s| >= 1/2."""
    s = np.asarray(s, float)
    out = np.zeros_like(s)
    m = np.abs(s) < 0.5
    out[m] = ZETA_NORM_C * np.exp(-1.0 / (1.0 - 4.0 * s[m] ** 2))
    return out


def default_level_scale(n):
    """Mollifier schedule m_n = ceil(5 n^0.4); m_1 = 5, slowly divergent."""
    if n < 1:
        raise ValueError("level must be >= 1")
    return int(math.ceil(5.0 * float(n) ** 0.4))


class _Profile:
    """Dense tables of G and its integral transforms (built once)."""

    def __init__(self, n_samples=PROFILE_SAMPLES, nq=192, nth=192):
        s = np.linspace(0.0, 1.0, n_samples)
        q, wq = np.polynomial.legendre.leggauss(nq)
        q = 0.25 * (q + 1.0)
        wq = 0.25 * wq
        th, wth = np.polynomial.legendre.leggauss(nth)
        th = np.pi * (th + 1.0)
        wth = np.pi * wth
        qx = q[:, None] * np.cos(th)[None, :]
        qy = q[:, None] * np.sin(th)[None, :]
        zq = (wq * q * zeta_profile(q))[:, None] * wth[None, :]
        G = np.empty_like(s)
        chunk = 128
        for lo in range(0, n_samples, chunk):
            hi = min(lo + chunk, n_samples)
            d = np.hypot(s[lo:hi, None, None] - qx[None], qy[None])
            G[lo:hi] = np.sum(zq[None] * zeta_profile(d), axis=(1, 2))
        self.s = s
        self.G = G
        self.h = s[1] - s[0]

        # cumulative transforms, integrated right-to-left (trapezoid)
        sg = s * G
        self.g = _tail_cumtrapz(sg, self.h)                    # int_a^1 sG
        safe_log = np.where(s > 0, np.log(np.maximum(s, 1e-300)), 0.0)
        self.F = _tail_cumtrapz(sg * safe_log, self.h)         # int_a^1 sG log s
        self.c2 = 0.5 * np.pi * np.trapezoid(s ** 3 * G, s)
        self.kappa = -np.trapezoid(sg * safe_log, s)
        self.G0 = float(G[0])
        self.mass = float(np.trapezoid(2.0 * np.pi * sg, s))
        # Catmull-Rom views shared with the numba kernels (same arithmetic)
        self._G_interp = RadialTable(1.0, G)
        self._g_interp = RadialTable(1.0, self.g)
        self._F_interp = RadialTable(1.0, self.F)

    def G_at(self, a):
        return self._G_interp(a)

    def g_at(self, a):
        return self._g_interp(a)

    def lambda_at(self, a):
        """Lambda(a) = F(a) - log(a) g(a); 0 beyond the support."""
        a = np.asarray(a, float)
        aa = np.minimum(np.maximum(a, 1e-300), 1.0)
        lam = self._F_interp(aa) - np.log(aa) * self._g_interp(aa)
        return np.where(a >= 1.0, 0.0, lam)


def _tail_cumtrapz(f, h):
    inc = 0.5 * h * (f[1:] + f[:-1])
    out = np.concatenate([np.cumsum(inc[::-1])[::-1], [0.0]])
    return out


_profile_cache = {}


def radial_profile():
    """The shared unit-scale tables (computed once per process)."""
    if "p" not in _profile_cache:
        _profile_cache["p"] = _Profile()
    return _profile_cache["p"]


class MollifierFamily:
    """zeta_n / G_n machinery bound to a KernelTable for the base kernels."""

    def __init__(self, kernel_table, level_scale=default_level_scale):
        self.ktab = kernel_table
        self.level_scale = level_scale
        self.profile = radial_profile()

    def m(self, n):
        return self.level_scale(n)

    def zeta_eval(self, r, n):
        """zeta_n at radius r: m_n^2 zeta(m_n r)."""
        mn = self.m(n)
        return mn ** 2 * zeta_profile(mn * np.asarray(r, float))

    def G_eval(self, r, n):
        """G_n = zeta_n * zeta_n at radius r: m_n^2 G(m_n r)."""
        mn = self.m(n)
        return mn ** 2 * self.profile.G_at(mn * np.asarray(r, float))

    def G_diag(self, n):
        """G_n(0) = m_n^2 G(0)."""
        return self.m(n) ** 2 * self.profile.G0

    def mollified_green_diag(self, n):
        """(G_n*N)(0) = log(m_n)/2pi + kappa + sigma1(0) + c2/m_n^2."""
        mn = self.m(n)
        p = self.profile
        return (
            np.log(mn) / (2.0 * np.pi)
            + p.kappa
            + self.ktab.sigma1_origin
            + p.c2 / mn ** 2
        )

    def mollified_green(self, x, n):
        """(G_n*N)(x), defined at x = 0 too (closed radial-average form)."""
        x = np.asarray(x, float)
        d = wrap(x)
        r = np.sqrt(np.sum(d * d, axis=-1))
        mn = self.m(n)
        p = self.profile
        out = np.full(r.shape, self.mollified_green_diag(n))
        pos = r > 0
        if np.any(pos):
            base = self.ktab.green_N(x[pos] if x.ndim > 1 else x)
            out[pos] = base + p.c2 / mn ** 2 - p.lambda_at(mn * r[pos])
        return out if out.shape else float(out)

    def mollified_K(self, x, n):
        """(G_n*K)(x); equals K exactly for r >= 1/m_n, zero at x = 0."""
        x = np.asarray(x, float)
        d = wrap(x)
        r2 = np.sum(d * d, axis=-1)
        mn = self.m(n)
        out = np.zeros(d.shape)
        pos = r2 > 0
        if np.any(pos):
            dp = d[pos] if x.ndim > 1 else d
            k = self.ktab.biot_savart_K(dp)
            corr = self.profile.g_at(mn * np.sqrt(r2[pos]))
            perp = np.stack([dp[..., 1], -dp[..., 0]], axis=-1)
            out[pos] = k + perp * (corr / r2[pos])[..., None]
        return out

    def required_grid(self, n):
        """Smallest power-of-two M with h <= 1/(8 m_n)."""
        mn = self.m(n)
        M = 8
        while M < 8 * mn:
            M *= 2
        return M

    def mollify_empirical(self, positions, n, grid):
        """Deposit zeta_n bumps at the particle positions -> density field.

        Requires h <= 1/(8 m_n) so the grid resolves the bump.
        """
        from . import pairwise

        positions = np.atleast_2d(np.asarray(positions, float))
        if len(positions) < 1:
            raise ValueError("need at least one particle")
        mn = self.m(n)
        if grid.h > 1.0 / (8.0 * mn):
            raise ValueError(
                f"grid M={grid.M} under-resolves level {n} (m_n={mn}); "
                f"need M >= {self.required_grid(n)}"
            )
        vals = pairwise.deposit(positions, mn, grid.M)
        return GridField(grid, vals)


# -- grid-sampled level tables (cache file interface) ----------------------

MOLLTABLE_MAGIC = b"T2M1"


class MollifiedKernelTable:
    """G_n*N and G_n*K sampled on the displacement grid for one level."""

    def __init__(self, family, n, grid=None):
        import struct

        self.level = int(n)
        self.family = family
        grid = grid or family.ktab.grid
        self.grid = grid
        M = grid.M
        d = wrap(np.arange(M) / M)
        DX, DY = np.meshgrid(d, d, indexing="ij")
        disp = np.stack([DX, DY], axis=-1).reshape(-1, 2)
        self.green_values = GridField(
            grid, family.mollified_green(disp, n).reshape(M, M)
        )
        self.K_values = GridField(
            grid, family.mollified_K(disp, n).reshape(M, M, 2)
        )

    def save(self, path):
        import struct

        with open(path, "wb") as fh:
            fh.write(
                struct.pack(
                    "<4sIII",
                    MOLLTABLE_MAGIC,
                    self.grid.M,
                    self.family.ktab.fourier_cutoff,
                    self.level,
                )
            )
            fh.write(self.green_values.tobytes())
            fh.write(self.K_values.tobytes())

    @classmethod
    def load_values(cls, path):
        """Read back (level, green GridField, K GridField) from a cache."""
        import struct

        with open(path, "rb") as fh:
            buf = fh.read()
        magic, M, cutoff, level = struct.unpack_from("<4sIII", buf, 0)
        if magic != MOLLTABLE_MAGIC:
            raise ValueError(f"bad mollifier table magic {magic!r}")
        green, off = GridField.frombytes(buf, 16)
        kval, _ = GridField.frombytes(buf, off)
        return level, green, kval
