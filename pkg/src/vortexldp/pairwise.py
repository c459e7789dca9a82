"""Dispatch layer for the O(n^2) pairwise kernels.

Every operation has a numba implementation (_fast.py) and a vectorized
numpy fallback; VORTEXLDP_NUMBA=0 selects the fallback.  The numpy path
chunks row blocks to bound memory at large n.
"""

import numpy as np
from scipy.special import exp1 as _scipy_exp1

from .accel import USE_NUMBA
from .interp import bspline2_eval
from .kernels import bs_near, green_near
from .mollify import radial_profile, zeta_profile
from .torus import wrap

if USE_NUMBA:
    from . import _fast

_CHUNK = 256


class NearCollisionError(RuntimeError):
    """A particle pair fell inside the bare-kernel guard radius."""

    def __init__(self, i, j, r_min):
        super().__init__(
            f"particles {i} and {j} closer than r_min={r_min:g}"
        )
        self.pair = (i, j)


def _tables(ktab):
    return ktab._far_coeff, ktab._farK_coeff[0], ktab._farK_coeff[1], ktab.t0


def _moll_args(family, level):
    if level is None:
        return 0.0, np.zeros(2), np.zeros(2), np.zeros(2), 1.0, 0.0
    p = family.profile
    return float(family.m(level)), p.G, p.g, p.F, p.h, p.c2


def _k_eval_np(dx, dy, ktab, mn, gint, h1):
    """Vectorized kernel K (optionally mollified) at displacement arrays."""
    coefn, coefkx, coefky, t0 = _tables(ktab)
    mtab = coefkx.shape[0]
    kx, ky = bs_near(dx, dy, t0)
    kx = kx + bspline2_eval(coefkx, dx * mtab, dy * mtab)
    ky = ky + bspline2_eval(coefky, dx * mtab, dy * mtab)
    if mn > 0.0:
        r2 = dx * dx + dy * dy
        a = mn * np.sqrt(r2)
        prof = radial_profile()
        corr = np.where(
            (a < 1.0) & (r2 > 0), prof.g_at(a) / np.maximum(r2, 1e-300), 0.0
        )
        kx = kx + dy * corr
        ky = ky - dx * corr
    return kx, ky


def drift(pos, ktab, family=None, level=None, r_min=1e-6):
    """Pairwise drift (1/n) sum_{j != i} K(X_i - X_j), shape (n, 2).

    level = None is the bare singular kernel with the r_min guard;
    an integer level uses the mollified kernel G_level * K.
    """
    pos = np.ascontiguousarray(pos, float)
    n = len(pos)
    out = np.empty((n, 2))
    mn, _, gint, _, h1, _ = _moll_args(family, level)
    if USE_NUMBA:
        coefn, coefkx, coefky, t0 = _tables(ktab)
        i, j = _fast.drift(
            pos, t0, coefkx, coefky, coefkx.shape[0], mn, gint, h1, r_min, out
        )
        if i >= 0:
            raise NearCollisionError(i, j, r_min)
        return out
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        dx = wrap(pos[lo:hi, None, 0] - pos[None, :, 0])
        dy = wrap(pos[lo:hi, None, 1] - pos[None, :, 1])
        r2 = dx * dx + dy * dy
        diag = np.zeros_like(r2, bool)
        diag[np.arange(hi - lo), np.arange(lo, hi)] = True
        if mn <= 0.0:
            bad = (r2 < r_min * r_min) & ~diag
            if bad.any():
                bi, bj = np.argwhere(bad)[0]
                raise NearCollisionError(int(bi + lo), int(bj), r_min)
        kx, ky = _k_eval_np(dx, dy, ktab, mn, gint, h1)
        kx[diag | (r2 == 0)] = 0.0
        ky[diag | (r2 == 0)] = 0.0
        out[lo:hi, 0] = kx.sum(axis=1) / n
        out[lo:hi, 1] = ky.sum(axis=1) / n
    return out


def energy_sums(pos, ktab, family=None, level=None):
    """(sum_{i<j} N, sum_{i<j} G_n*N, sum_{i<j} G_n) over distinct pairs."""
    pos = np.ascontiguousarray(pos, float)
    n = len(pos)
    mn, Gtab, gint, Ftab, h1, c2 = _moll_args(family, level)
    if USE_NUMBA:
        coefn, coefkx, coefky, t0 = _tables(ktab)
        return _fast.energy_sums(
            pos, t0, coefn, coefn.shape[0], mn, Gtab, gint, Ftab, h1, c2
        )
    coefn, _, _, t0 = _tables(ktab)
    mtab = coefn.shape[0]
    prof = radial_profile() if mn > 0 else None
    s_n = s_gnn = s_gn = 0.0
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        dx = wrap(pos[lo:hi, None, 0] - pos[None, :, 0])
        dy = wrap(pos[lo:hi, None, 1] - pos[None, :, 1])
        # strict upper triangle within the global index set
        iidx = np.arange(lo, hi)[:, None]
        jidx = np.arange(n)[None, :]
        mask = jidx > iidx
        if not mask.any():
            continue
        dxm = dx[mask]
        dym = dy[mask]
        vals = green_near(dxm, dym, t0) + bspline2_eval(
            coefn, dxm * mtab, dym * mtab
        )
        s_n += vals.sum()
        if mn > 0.0:
            r = np.hypot(dxm, dym)
            a = mn * r
            lam = prof.lambda_at(a)
            s_gnn += (vals + c2 / mn ** 2 - lam).sum()
            s_gn += (mn ** 2 * prof.G_at(a)).sum()
    return float(s_n), float(s_gnn), float(s_gn)


def r_pairing(pos, phi, ktab, family=None, level=None):
    """Symmetrized pairing (1/n^2) sum_{i<j} (phi_i - phi_j).K(X_i - X_j)."""
    pos = np.ascontiguousarray(pos, float)
    phi = np.ascontiguousarray(phi, float)
    n = len(pos)
    mn, _, gint, _, h1, _ = _moll_args(family, level)
    if USE_NUMBA:
        coefn, coefkx, coefky, t0 = _tables(ktab)
        return _fast.r_pairing(
            pos, phi, t0, coefkx, coefky, coefkx.shape[0], mn, gint, h1
        )
    acc = 0.0
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        dx = wrap(pos[lo:hi, None, 0] - pos[None, :, 0])
        dy = wrap(pos[lo:hi, None, 1] - pos[None, :, 1])
        mask = (np.arange(n)[None, :] > np.arange(lo, hi)[:, None]) & (
            dx * dx + dy * dy > 0
        )
        kx, ky = _k_eval_np(dx, dy, ktab, mn, gint, h1)
        fx = phi[lo:hi, None, 0] - phi[None, :, 0]
        fy = phi[lo:hi, None, 1] - phi[None, :, 1]
        acc += ((fx * kx + fy * ky) * mask).sum()
    return float(acc) / n ** 2


def grad_n_at(pos, ktab, family=None, level=None):
    """Field (1/n) sum_k grad(G_n*N)(X_i - X_k) at the particles, (n, 2)."""
    pos = np.ascontiguousarray(pos, float)
    n = len(pos)
    mn, _, gint, _, h1, _ = _moll_args(family, level)
    out = np.empty((n, 2))
    if USE_NUMBA:
        coefn, coefkx, coefky, t0 = _tables(ktab)
        _fast.grad_n_at(
            pos, t0, coefkx, coefky, coefkx.shape[0], mn, gint, h1, out
        )
        return out
    prof = radial_profile() if mn > 0 else None
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        dx = wrap(pos[lo:hi, None, 0] - pos[None, :, 0])
        dy = wrap(pos[lo:hi, None, 1] - pos[None, :, 1])
        r2 = dx * dx + dy * dy
        kx, ky = _k_eval_np(dx, dy, ktab, 0.0, None, 1.0)
        gx = -ky
        gy = kx
        if mn > 0.0:
            a = mn * np.sqrt(r2)
            corr = np.where(
                (a < 1.0) & (r2 > 0), prof.g_at(a) / np.maximum(r2, 1e-300), 0.0
            )
            gx = gx + dx * corr
            gy = gy + dy * corr
        zero = r2 == 0
        gx[zero] = 0.0
        gy[zero] = 0.0
        out[lo:hi, 0] = gx.sum(axis=1) / n
        out[lo:hi, 1] = gy.sum(axis=1) / n
    return out


def min_pair_dist(pos):
    """Smallest pair separation in the torus metric."""
    pos = np.ascontiguousarray(pos, float)
    if len(pos) < 2:
        return np.inf
    if USE_NUMBA:
        return float(np.sqrt(_fast.min_pair_dist_sq(pos)))
    best = 1.0
    n = len(pos)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        dx = wrap(pos[lo:hi, None, 0] - pos[None, :, 0])
        dy = wrap(pos[lo:hi, None, 1] - pos[None, :, 1])
        r2 = dx * dx + dy * dy
        mask = np.arange(n)[None, :] != np.arange(lo, hi)[:, None]
        vals = r2[mask]
        if vals.size:
            best = min(best, vals.min())
    return float(np.sqrt(best))


def deposit(pos, mn, grid_m):
    """Grid deposit of zeta_n bumps at the particles; returns (M, M)."""
    from .constants import ZETA_NORM_C

    pos = np.ascontiguousarray(pos, float)
    out = np.zeros((grid_m, grid_m))
    if USE_NUMBA:
        _fast.deposit(pos, float(mn), ZETA_NORM_C, grid_m, out)
        return out
    n = len(pos)
    h = 1.0 / grid_m
    half = 0.5 / mn
    span = int(np.ceil(half / h)) + 1
    offs = np.arange(-span, span + 1)
    for p in range(n):
        ci = int(np.floor((pos[p, 0] + 0.5) / h))
        cj = int(np.floor((pos[p, 1] + 0.5) / h))
        ii = (ci + offs) % grid_m
        jj = (cj + offs) % grid_m
        dx = wrap(-0.5 + ii * h - pos[p, 0])
        dy = wrap(-0.5 + jj * h - pos[p, 1])
        bump = mn ** 2 * zeta_profile(
            mn * np.hypot(dx[:, None], dy[None, :])
        )
        out[np.ix_(ii, jj)] += bump / n
    return out
