"""Geometry, grids, spectral transforms and Wasserstein-2 on the flat torus.

The torus is the half-open unit cell [-1/2, 1/2)^2 with the minimum-image
metric.  All "Wasserstein" values follow the squared-cost convention: the
infimum of int r(x,y)^2 dpi, no square root taken anywhere.
"""

import struct

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

GRIDFIELD_MAGIC = b"T2F1"


def wrap(x):
    """Map coordinates to the canonical half-open cell [-1/2, 1/2)."""
    return (np.asarray(x, float) + 0.5) % 1.0 - 0.5


def min_image(x, y):
    """Minimum-image displacement x - y, componentwise in [-1/2, 1/2).

    Ties at distance exactly 1/2 resolve to -1/2 (the canonical cell),
    making the representative unique.
    """
    return wrap(np.asarray(x, float) - np.asarray(y, float))


def torus_dist(x, y):
    """Minimum-image Euclidean distance r(x, y)."""
    d = min_image(x, y)
    return np.sqrt(np.sum(d * d, axis=-1))


def pairwise_sq_dist(xs, ys):
    """(n, m) matrix of squared minimum-image distances."""
    d0 = wrap(xs[:, None, 0] - ys[None, :, 0])
    d1 = wrap(xs[:, None, 1] - ys[None, :, 1])
    return d0 * d0 + d1 * d1


class PeriodicGrid:
    """Uniform M x M grid with nodes at (-1/2 + i h, -1/2 + j h), h = 1/M."""

    def __init__(self, M):
        M = int(M)
        if M < 8 or (M & (M - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 8, got {M}")
        self.M = M
        self.h = 1.0 / M

    @property
    def nodes_1d(self):
        return -0.5 + self.h * np.arange(self.M)

    def meshgrid(self):
        x = self.nodes_1d
        return np.meshgrid(x, x, indexing="ij")

    def kgrid(self):
        """Integer wavenumbers in fft order, as (KX, KY)."""
        k = np.fft.fftfreq(self.M, d=1.0 / self.M)
        return np.meshgrid(k, k, indexing="ij")

    def __eq__(self, other):
        return isinstance(other, PeriodicGrid) and other.M == self.M

    def __repr__(self):
        return f"PeriodicGrid(M={self.M})"


class GridField:
    """Scalar (M, M) or vector (M, M, 2) field sampled on a PeriodicGrid."""

    def __init__(self, grid, values):
        values = np.asarray(values, float)
        if values.shape[:2] != (grid.M, grid.M) or values.ndim not in (2, 3):
            raise ValueError(f"bad field shape {values.shape} for {grid}")
        self.grid = grid
        self.values = values

    @property
    def components(self):
        return 1 if self.values.ndim == 2 else self.values.shape[2]

    def copy(self):
        return GridField(self.grid, self.values.copy())

    def grid_mean(self):
        return self.values.mean(axis=(0, 1))

    def quadrature(self, other=None):
        """Grid quadrature of the field (times `other` if given)."""
        v = self.values if other is None else self.values * other
        return v.sum() * self.grid.h ** 2

    def l2_norm_sq(self):
        return float(np.sum(self.values ** 2)) * self.grid.h ** 2

    def is_density(self, tol=1e-8):
        return (
            self.components == 1
            and self.values.min() >= -tol
            and abs(self.grid_mean() - 1.0) <= tol
        )

    def require_density(self, tol=1e-6, what="field"):
        if self.components != 1:
            raise ValueError(f"{what}: expected a scalar density")
        if self.values.min() < -tol or abs(self.grid_mean() - 1.0) > tol:
            raise ValueError(
                f"{what}: not a probability density "
                f"(min={self.values.min():.3e}, mean={self.grid_mean():.12f})"
            )

    # -- binary serialization ------------------------------------------------
    # 16-byte header {magic "T2F1", u32 M, u32 components, u32 reserved},
    # then row-major little-endian float64 payload.

    def tobytes(self):
        head = struct.pack(
            "<4sIII", GRIDFIELD_MAGIC, self.grid.M, self.components, 0
        )
        return head + self.values.astype("<f8").tobytes(order="C")

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.tobytes())

    @classmethod
    def frombytes(cls, buf, offset=0):
        magic, M, comps, _ = struct.unpack_from("<4sIII", buf, offset)
        if magic != GRIDFIELD_MAGIC:
            raise ValueError(f"bad GridField magic {magic!r}")
        count = M * M * comps
        vals = np.frombuffer(
            buf, dtype="<f8", count=count, offset=offset + 16
        ).astype(float)
        shape = (M, M) if comps == 1 else (M, M, comps)
        field = cls(PeriodicGrid(M), vals.reshape(shape))
        return field, offset + 16 + 8 * count

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            field, _ = cls.frombytes(fh.read())
        return field


# -- spectral transforms -----------------------------------------------------
# Fourier coefficients c_k = int f e^{-2 pi i k.x}; the node offset -1/2
# contributes the phase (-1)^(k1+k2) relative to a raw FFT.


def _phase(M):
    k = np.fft.fftfreq(M, d=1.0 / M)
    return (-1.0) ** (np.abs(k[:, None]) + np.abs(k[None, :]))


def to_spectral(field):
    """True Fourier coefficients, indexed k in {-M/2 .. M/2-1}^2 (shifted)."""
    M = field.grid.M
    c = np.fft.fft2(field.values, axes=(0, 1)) / M ** 2
    if field.components == 1:
        c = c * _phase(M)
    else:
        c = c * _phase(M)[:, :, None]
    return np.fft.fftshift(c, axes=(0, 1))


def from_spectral(grid, coeffs):
    """Inverse of to_spectral; returns a GridField."""
    M = grid.M
    c = np.fft.ifftshift(np.asarray(coeffs), axes=(0, 1))
    if c.ndim == 2:
        c = c * _phase(M)
    else:
        c = c * _phase(M)[:, :, None]
    vals = np.real(np.fft.ifft2(c, axes=(0, 1))) * M ** 2
    return GridField(grid, vals)


def spectral_raw(values):
    """Raw fft2 / M^2 (no node-offset phase); for symbol pipelines."""
    M = values.shape[0]
    return np.fft.fft2(values, axes=(0, 1)) / M ** 2


def spectral_raw_inv(coeffs):
    M = coeffs.shape[0]
    return np.real(np.fft.ifft2(coeffs, axes=(0, 1))) * M ** 2


# -- exact Wasserstein-2 (squared cost) ---------------------------------------


def wasserstein2(xs, ys, wx=None, wy=None, n_max=4096, lp_max=256):
    """Exact squared-cost optimal transport between discrete measures.

    Equal-size uniform measures solve the assignment problem; general
    weights fall back to the transport LP.  Sizes beyond the caps refuse
    with a pointer to the entropic mode.
    """
    xs = np.atleast_2d(np.asarray(xs, float))
    ys = np.atleast_2d(np.asarray(ys, float))
    na, nb = len(xs), len(ys)
    uniform = (
        wx is None
        and wy is None
        and na == nb
    )
    if wx is None:
        wx = np.full(na, 1.0 / na)
    if wy is None:
        wy = np.full(nb, 1.0 / nb)
    wx = np.asarray(wx, float)
    wy = np.asarray(wy, float)
    if abs(wx.sum() - 1.0) > 1e-12 or abs(wy.sum() - 1.0) > 1e-12:
        raise ValueError(
            f"mass mismatch: {wx.sum()!r} vs {wy.sum()!r} (must both be 1)"
        )
    if not uniform:
        uniform = na == nb and np.allclose(wx, 1.0 / na) and np.allclose(wy, 1.0 / nb)
    if uniform:
        if na > n_max:
            raise ValueError(
                f"support size {na} exceeds n_max={n_max}; use entropic mode"
            )
        cost = pairwise_sq_dist(xs, ys)
        ri, ci = linear_sum_assignment(cost)
        return float(cost[ri, ci].sum()) / na
    if max(na, nb) > lp_max:
        raise ValueError(
            f"support size {max(na, nb)} exceeds lp_max={lp_max}; use entropic mode"
        )
    cost = pairwise_sq_dist(xs, ys).ravel()
    # transport polytope: row sums wx, column sums wy
    rows = np.zeros((na, na * nb))
    for i in range(na):
        rows[i, i * nb:(i + 1) * nb] = 1.0
    cols = np.zeros((nb, na * nb))
    for j in range(nb):
        cols[j, j::nb] = 1.0
    a_eq = np.vstack([rows, cols[:-1]])      # drop one redundant constraint
    b_eq = np.concatenate([wx, wy[:-1]])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


# -- entropic Wasserstein-2 between grid densities ----------------------------


def _axis_gibbs(M, eps):
    d = wrap(np.arange(M) / M)
    dd = wrap(d[:, None] - d[None, :])
    return np.exp(-(dd * dd) / eps)


def sinkhorn_cost(a, b, eps, max_iters=2000, tol=1e-10):
    """Entropic OT cost <pi, c> between densities on the same grid.

    The torus squared-distance cost separates per axis, so the Gibbs
    kernel factorizes and each iteration is two M x M matrix products.
    """
    grid = a.grid
    if b.grid != grid:
        raise ValueError("densities must share a grid")
    M, h = grid.M, grid.h
    mu = a.values * h * h
    nu = b.values * h * h
    mu = np.maximum(mu, 0)
    nu = np.maximum(nu, 0)
    mu /= mu.sum()
    nu /= nu.sum()
    K1 = _axis_gibbs(M, eps)

    def kdot(v):
        return K1 @ v @ K1.T

    v = np.ones((M, M))
    u = np.ones((M, M))
    resid = np.inf
    for it in range(max_iters):
        u = mu / np.maximum(kdot(v), 1e-300)
        v = nu / np.maximum(kdot(u), 1e-300)
        if it % 10 == 0 or it == max_iters - 1:
            marg = v * kdot(u)
            resid = np.abs(marg - nu).sum()
            if resid < tol:
                break
    else:
        raise RuntimeError(
            f"sinkhorn did not converge in {max_iters} iterations; "
            f"last residual {resid:.3e}"
        )
    if resid >= tol:
        raise RuntimeError(
            f"sinkhorn did not converge in {max_iters} iterations; "
            f"last residual {resid:.3e}"
        )
    # <pi, c> with the factorized kernel: sum over axis-0 and axis-1 parts
    d = wrap(np.arange(M) / M)
    dd = wrap(d[:, None] - d[None, :])
    KC = K1 * (dd * dd)
    cost0 = np.sum(u * (KC @ v @ K1.T))
    cost1 = np.sum(u * (K1 @ v @ KC.T))
    return float(cost0 + cost1)


def wasserstein2_entropic(a, b, eps, max_iters=2000, tol=1e-10):
    """Debiased entropic squared-cost W2 between grid densities.

    Returns S(a,b) - (S(a,a) + S(b,b))/2; the residual bias is one-sided,
    O(eps log M).
    """
    s_ab = sinkhorn_cost(a, b, eps, max_iters, tol)
    s_aa = sinkhorn_cost(a, a, eps, max_iters, tol)
    s_bb = sinkhorn_cost(b, b, eps, max_iters, tol)
    return s_ab - 0.5 * (s_aa + s_bb)
