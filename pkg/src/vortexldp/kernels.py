"""Periodic Green function, Biot-Savart kernel, and the torus heat kernel.

The Green function solves -Delta N = delta_0 - 1 with zero mean; the
velocity kernel is K = -grad^perp N.  Point evaluation uses a heat-kernel
(Ewald) split: a 3 x 3 image sum of exponential integrals carries the log
singularity analytically, and the Gaussian-filtered far field -- a C-inf
periodic function with mild derivatives -- is tabulated once and
interpolated with periodic cubic B-splines.  Two split parameters give two
independent summation routes; they agree to ~1e-13, which is the basis of
the split-vs-spectral-sum cross checks.
"""

import struct

import numpy as np
from scipy.special import exp1

from .interp import bspline2_prefilter, bspline2_eval
from .torus import GridField, PeriodicGrid, spectral_raw_inv, wrap

KERNELTABLE_MAGIC = b"T2K1"

# default Ewald split time: 3x3 images then suffice for the near sum
# (E1 at the nearest excluded image, distance 3/2, is ~6e-16)
T0_TABLE = 1.0 / 56.0


class BumpPsi:
    """C-infinity radial cutoff: 1 on r < 1/4, 0 on r > 1/3.

    Profile is the smooth partition ratio f(1-s)/(f(s)+f(1-s)) with
    f(u) = exp(-1/u), mapped affinely from r in [1/4, 1/3]; all
    derivatives vanish at both plateau edges.
    """

    inner = 0.25
    outer = 1.0 / 3.0

    @staticmethod
    def _f(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    def __call__(self, r):
        r = np.abs(np.asarray(r, float))
        s = (r - self.inner) / (self.outer - self.inner)
        s = np.clip(s, 0.0, 1.0)
        a = self._f(1.0 - s)
        b = self._f(s)
        return a / (a + b + 1e-300)


def ewald_images(t0):
    """Image offsets for the near sum at split time t0."""
    reach = np.sqrt(4.0 * t0 * 45.0)         # e^{-45} tail
    span = int(np.ceil(reach + 0.71))
    offs = [
        (mx, my)
        for mx in range(-span, span + 1)
        for my in range(-span, span + 1)
    ]
    return np.array(offs, float)


def green_near(dx, dy, t0):
    """Near (image) part of N: (1/4pi) sum_m E1(|x-m|^2 / 4 t0) - t0."""
    dx = np.asarray(dx, float)
    dy = np.asarray(dy, float)
    out = np.full(np.broadcast(dx, dy).shape, -t0)
    for mx, my in ewald_images(t0):
        r2 = (dx - mx) ** 2 + (dy - my) ** 2
        z = r2 / (4.0 * t0)
        small = z < 45.0
        if np.any(small):
            zz = np.where(small, np.maximum(z, 1e-300), 1.0)
            out = out + np.where(small, exp1(zz) / (4.0 * np.pi), 0.0)
    return out


def bs_near(dx, dy, t0):
    """Near part of K = -grad^perp N: sum_m (-y, x)/(2 pi r^2) e^{-r^2/4t0}."""
    dx = np.asarray(dx, float)
    dy = np.asarray(dy, float)
    kx = np.zeros(np.broadcast(dx, dy).shape)
    ky = np.zeros_like(kx)
    for mx, my in ewald_images(t0):
        ux = dx - mx
        uy = dy - my
        r2 = ux * ux + uy * uy
        g = np.exp(-np.minimum(r2 / (4.0 * t0), 700.0)) / (
            2.0 * np.pi * np.maximum(r2, 1e-300)
        )
        kx += -uy * g
        ky += ux * g
    return kx, ky


def deriv_wavenumbers(M):
    """Integer wavenumbers for spectral derivatives, Nyquist row zeroed.

    The unpaired Nyquist mode of an even-size real grid cannot carry an
    odd (derivative) symbol; dropping it is standard practice.
    """
    k = np.fft.fftfreq(M, d=1.0 / M)
    k[M // 2] = 0.0
    return np.meshgrid(k, k, indexing="ij")


def _gauss_symbol(M, t0):
    k = np.fft.fftfreq(M, d=1.0 / M)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    k2 = kx * kx + ky * ky
    sym = np.zeros((M, M))
    nz = k2 > 0
    sym[nz] = np.exp(-4.0 * np.pi ** 2 * k2[nz] * t0) / (
        4.0 * np.pi ** 2 * k2[nz]
    )
    return sym, kx, ky


def green_far_direct(dx, dy, t0, cutoff):
    """Gaussian-filtered far sum, direct mode summation (oracle route)."""
    dx = np.asarray(dx, float)
    dy = np.asarray(dy, float)
    out = np.zeros(np.broadcast(dx, dy).shape)
    for kx in range(-cutoff, cutoff + 1):
        row = 0.0
        for ky in range(-cutoff, cutoff + 1):
            k2 = kx * kx + ky * ky
            if k2 == 0:
                continue
            a = 4.0 * np.pi ** 2 * k2
            w = np.exp(-a * t0) / a
            if w < 1e-20:
                continue
            out = out + w * np.cos(2.0 * np.pi * (kx * dx + ky * dy))
    return out


def green_spectral_sum(dx, dy, cutoff=512):
    """Oracle evaluation of N: spectrally-convergent lattice sum.

    The split time is tied to the cutoff so the Fourier tail beyond
    `cutoff` is below double-precision resolution; the result is the
    cutoff-independent limit of the mode sum.
    """
    t0 = 42.0 / (4.0 * np.pi ** 2 * cutoff ** 2)
    return green_near(dx, dy, t0) + green_far_direct(dx, dy, t0, cutoff)


def bs_spectral_sum(dx, dy, cutoff=512):
    """Oracle evaluation of K by the same accelerated mode sum."""
    t0 = 42.0 / (4.0 * np.pi ** 2 * cutoff ** 2)
    nx, ny = bs_near(dx, dy, t0)
    dx = np.asarray(dx, float)
    dy = np.asarray(dy, float)
    fx = np.zeros(np.broadcast(dx, dy).shape)
    fy = np.zeros_like(fx)
    for kx in range(-cutoff, cutoff + 1):
        for ky in range(-cutoff, cutoff + 1):
            k2 = kx * kx + ky * ky
            if k2 == 0:
                continue
            a = 4.0 * np.pi ** 2 * k2
            w = np.exp(-a * t0) / a
            if w < 1e-20:
                continue
            s = -2.0 * np.pi * w * np.sin(2.0 * np.pi * (kx * dx + ky * dy))
            fx += ky * s
            fy += -kx * s
    return nx + fx, ny + fy


class KernelTable:
    """Tabulated periodic kernels for O(1) point evaluation.

    N_values / K_values hold the band-limited grid samples built from the
    exact spectral symbols (grid mean of N is exactly zero; spectral
    divergence of K is exactly zero).  Point evaluation combines the
    analytic near image sum with B-spline interpolation of the tabulated
    Gaussian far field.
    """

    def __init__(self, M=256, fourier_cutoff=256, t0=T0_TABLE):
        self.grid = PeriodicGrid(M)
        self.fourier_cutoff = int(fourier_cutoff)
        self.t0 = float(t0)
        self.psi = BumpPsi()
        self.near_field_radius = BumpPsi.inner
        M = self.grid.M

        sym, kx, ky = _gauss_symbol(M, self.t0)
        far = spectral_raw_inv(sym)
        self._far_coeff = bspline2_prefilter(far)
        # K = (d2 N, -d1 N): K_hat = 2 pi i (k2, -k1) N_hat, with the
        # unpaired Nyquist bins dropped so the real projection is lossless
        nyq = (np.abs(kx) == M // 2) | (np.abs(ky) == M // 2)
        symk = np.where(nyq, 0.0, sym)
        fkx = spectral_raw_inv(2.0j * np.pi * ky * symk)
        fky = spectral_raw_inv(2.0j * np.pi * (-kx) * symk)
        self._farK_coeff = (bspline2_prefilter(fkx), bspline2_prefilter(fky))

        # band-limited grid samples of N and K from the exact symbols
        full = np.zeros((M, M))
        k2 = kx * kx + ky * ky
        nz = k2 > 0
        full[nz] = 1.0 / (4.0 * np.pi ** 2 * k2[nz])
        self.N_values = GridField(self.grid, spectral_raw_inv(full))
        fullk = np.where(nyq, 0.0, full)
        kvx = spectral_raw_inv(2.0j * np.pi * ky * fullk)
        kvy = spectral_raw_inv(2.0j * np.pi * (-kx) * fullk)
        self.K_values = GridField(self.grid, np.stack([kvx, kvy], axis=-1))

        # sigma1(0) = lim_{x->0} N(x) + log|x|/(2 pi), via E1(z)+log z -> -gamma
        s10 = (-np.euler_gamma + np.log(4.0 * self.t0)) / (4.0 * np.pi) - self.t0
        for mx, my in ewald_images(self.t0):
            if mx == 0 and my == 0:
                continue
            z = (mx * mx + my * my) / (4.0 * self.t0)
            if z < 45.0:
                s10 += exp1(z) / (4.0 * np.pi)
        sym0, _, _ = _gauss_symbol(M, self.t0)
        s10 += float(sym0.sum())
        self.sigma1_origin = s10

    # -- point evaluation ------------------------------------------------

    def _far_interp(self, dx, dy):
        M = self.grid.M
        return bspline2_eval(self._far_coeff, np.asarray(dx) * M, np.asarray(dy) * M)

    def green_N(self, x, mode="split"):
        """Green function at displacement x (array (..., 2) or (dx, dy))."""
        dx, dy = _split_xy(x)
        r2 = wrap(dx) ** 2 + wrap(dy) ** 2
        if np.any(r2 <= 0):
            raise ValueError("green_N: singular at r = 0")
        if mode == "split":
            return green_near(dx, dy, self.t0) + self._far_interp(dx, dy)
        if mode == "spectral_sum":
            return green_spectral_sum(dx, dy, self.fourier_cutoff)
        raise ValueError(f"unknown mode {mode!r}")

    def biot_savart_K(self, x, mode="split"):
        """K = -grad^perp N at displacement x; returns (..., 2)."""
        dx, dy = _split_xy(x)
        r2 = wrap(dx) ** 2 + wrap(dy) ** 2
        if np.any(r2 <= 0):
            raise ValueError("biot_savart_K: singular at r = 0")
        if mode == "split":
            M = self.grid.M
            nx, ny = bs_near(dx, dy, self.t0)
            fx = bspline2_eval(self._farK_coeff[0], np.asarray(dx) * M,
                               np.asarray(dy) * M)
            fy = bspline2_eval(self._farK_coeff[1], np.asarray(dx) * M,
                               np.asarray(dy) * M)
            return np.stack([nx + fx, ny + fy], axis=-1)
        if mode == "spectral_sum":
            kx, ky = bs_spectral_sum(dx, dy, self.fourier_cutoff)
            return np.stack([kx, ky], axis=-1)
        raise ValueError(f"unknown mode {mode!r}")

    def bounded_w(self, x, y):
        """w(x, y) = r(x, y) K(x - y); zero vector on the diagonal."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        d = wrap(x - y)
        r = np.sqrt(np.sum(d * d, axis=-1))
        out = np.zeros(d.shape)
        nz = r > 0
        if np.any(nz):
            k = self.biot_savart_K(d[nz])
            out[nz] = r[nz][..., None] * k
        return out

    def sigma1(self, x):
        """Smooth log-split remainder: sigma1 = N + psi log|x| / 2pi."""
        dx, dy = _split_xy(x)
        r = np.sqrt(wrap(dx) ** 2 + wrap(dy) ** 2)
        n = self.green_N(x)
        return n + self.psi(r) * np.log(np.maximum(r, 1e-300)) / (2.0 * np.pi)

    def sigma23(self, x):
        """Smooth vector remainder: K - psi (-x2, x1) / (2 pi |x|^2)."""
        dx, dy = _split_xy(x)
        dxw, dyw = wrap(dx), wrap(dy)
        r2 = np.maximum(dxw ** 2 + dyw ** 2, 1e-300)
        k = self.biot_savart_K(x)
        sing = np.stack([-dyw, dxw], axis=-1) / (2.0 * np.pi * r2[..., None])
        return k - self.psi(np.sqrt(r2))[..., None] * sing

    # -- cache file ------------------------------------------------------
    # header {magic "T2K1", u32 M, u32 cutoff}, then N_values and K_values
    # as GridField blobs.  Loading with mismatched parameters regenerates.

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4sII", KERNELTABLE_MAGIC, self.grid.M,
                                 self.fourier_cutoff))
            fh.write(self.N_values.tobytes())
            fh.write(self.K_values.tobytes())

    @classmethod
    def cached(cls, path, M=256, fourier_cutoff=256, t0=T0_TABLE):
        """Load from `path` if parameters match, else build and rewrite."""
        import os

        if os.path.exists(path):
            with open(path, "rb") as fh:
                buf = fh.read()
            try:
                magic, m_file, cut_file = struct.unpack_from("<4sII", buf, 0)
                if magic == KERNELTABLE_MAGIC and m_file == M and cut_file == fourier_cutoff:
                    table = cls(M, fourier_cutoff, t0)
                    nv, off = GridField.frombytes(buf, 12)
                    kv, _ = GridField.frombytes(buf, off)
                    table.N_values = nv
                    table.K_values = kv
                    return table
            except (struct.error, ValueError):
                pass
        table = cls(M, fourier_cutoff, t0)
        table.save(path)
        return table


def _split_xy(x):
    x = np.asarray(x, float)
    if x.shape and x.shape[-1] == 2:
        return x[..., 0], x[..., 1]
    raise ValueError("expected displacement array with trailing axis 2")


# -- heat kernel ---------------------------------------------------------


def heat_kernel(t, x, mode="fourier"):
    """Torus heat kernel Phi_t at displacement x.

    fourier: sum over modes of e^{-4 pi^2 |k|^2 t} e^{2 pi i k.x};
    images:  Poisson-summation form, Gaussians at all integer shifts.
    Both series are truncated below double precision.
    """
    if t <= 0:
        raise ValueError(f"heat_kernel requires t > 0, got {t}")
    dx, dy = _split_xy(x)
    dx = np.asarray(dx, float)
    dy = np.asarray(dy, float)
    if mode == "fourier":
        kmax = int(np.ceil(np.sqrt(45.0 / (4.0 * np.pi ** 2 * t)))) + 1
        out = np.zeros(np.broadcast(dx, dy).shape)
        for kx in range(-kmax, kmax + 1):
            for ky in range(-kmax, kmax + 1):
                w = np.exp(-4.0 * np.pi ** 2 * (kx * kx + ky * ky) * t)
                if w < 1e-20:
                    continue
                out = out + w * np.cos(2.0 * np.pi * (kx * dx + ky * dy))
        return out
    if mode == "images":
        span = int(np.ceil(np.sqrt(4.0 * t * 45.0) + 0.71)) + 1
        out = np.zeros(np.broadcast(dx, dy).shape)
        for mx in range(-span, span + 1):
            for my in range(-span, span + 1):
                r2 = (dx - mx) ** 2 + (dy - my) ** 2
                out = out + np.exp(-np.minimum(r2 / (4.0 * t), 700.0))
        return out / (4.0 * np.pi * t)
    raise ValueError(f"unknown mode {mode!r}")


def heat_symbol(grid, t):
    kx, ky = grid.kgrid()
    return np.exp(-4.0 * np.pi ** 2 * (kx * kx + ky * ky) * t)


def heat_convolve(t, field):
    """Solve the heat equation for time t: spectral decay of each mode."""
    if t < 0:
        raise ValueError("heat_convolve requires t >= 0")
    if t == 0:
        return field.copy()
    sym = heat_symbol(field.grid, t)
    vals = field.values
    if field.components == 1:
        out = np.real(np.fft.ifft2(np.fft.fft2(vals) * sym))
    else:
        out = np.stack(
            [np.real(np.fft.ifft2(np.fft.fft2(vals[..., c]) * sym))
             for c in range(field.components)],
            axis=-1,
        )
    return GridField(field.grid, out)
