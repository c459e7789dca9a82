"""Numba implementations of the O(n^2) pairwise kernels.

Imported only when the numba path is enabled; pairwise.py holds the
numpy fallbacks and the dispatch.  All reductions run in a fixed order
(outer i, inner j) so results are bit-reproducible.

Shared table arguments:
  t0, coefn, coefkx, coefky, mtab -- Ewald split time, B-spline
      coefficients of the far fields, and their grid size;
  mn, Gtab, gint, Ftab, h1, c2    -- mollifier scale m_n and the radial
      tables G(a), g(a) = int_a^1 sG, F(a) = int_a^1 sG log s on a
      uniform grid over [0, 1] with spacing h1.
"""

import numpy as np
from numba import njit

EULER_GAMMA = 0.5772156649015328606


@njit(cache=True, inline="always")
def _exp1(z):
    """Exponential integral E1 for z > 0 (series / continued fraction)."""
    if z <= 1.0:
        s = -EULER_GAMMA - np.log(z)
        p = 1.0
        sign = 1.0
        for k in range(1, 30):
            p *= z / k
            s += sign * p / k
            sign = -sign
            if p / k < 1e-18:
                break
        return s
    if z > 45.0:
        return 0.0
    # modified Lentz continued fraction: e^{-z} / (z+1- 1/(z+3- 4/(z+5- ...)))
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for i in range(1, 80):
        a = -1.0 * i * i
        b += 2.0
        d = b + a * d
        if abs(d) < tiny:
            d = tiny
        c = b + a / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return np.exp(-z) * f


@njit(cache=True, inline="always")
def _bs2(coef, u, v):
    """Periodic cubic B-spline at fractional index (u, v)."""
    m = coef.shape[0]
    u = u % m
    v = v % m
    iu = int(np.floor(u))
    iv = int(np.floor(v))
    tu = u - iu
    tv = v - iv
    wu0 = (1.0 - tu) ** 3 / 6.0
    wu1 = (4.0 - 6.0 * tu * tu + 3.0 * tu ** 3) / 6.0
    wu2 = (1.0 + 3.0 * tu + 3.0 * tu * tu - 3.0 * tu ** 3) / 6.0
    wu3 = tu ** 3 / 6.0
    wv0 = (1.0 - tv) ** 3 / 6.0
    wv1 = (4.0 - 6.0 * tv * tv + 3.0 * tv ** 3) / 6.0
    wv2 = (1.0 + 3.0 * tv + 3.0 * tv * tv - 3.0 * tv ** 3) / 6.0
    wv3 = tv ** 3 / 6.0
    i0 = (iu - 1) % m
    i1 = iu % m
    i2 = (iu + 1) % m
    i3 = (iu + 2) % m
    j0 = (iv - 1) % m
    j1 = iv % m
    j2 = (iv + 1) % m
    j3 = (iv + 2) % m
    r0 = wv0 * coef[i0, j0] + wv1 * coef[i0, j1] + wv2 * coef[i0, j2] + wv3 * coef[i0, j3]
    r1 = wv0 * coef[i1, j0] + wv1 * coef[i1, j1] + wv2 * coef[i1, j2] + wv3 * coef[i1, j3]
    r2 = wv0 * coef[i2, j0] + wv1 * coef[i2, j1] + wv2 * coef[i2, j2] + wv3 * coef[i2, j3]
    r3 = wv0 * coef[i3, j0] + wv1 * coef[i3, j1] + wv2 * coef[i3, j2] + wv3 * coef[i3, j3]
    return wu0 * r0 + wu1 * r1 + wu2 * r2 + wu3 * r3


@njit(cache=True, inline="always")
def _interp1(values, h, x):
    """Catmull-Rom on a uniform table over [0, (n-1) h], even at 0."""
    n = values.shape[0]
    if x >= (n - 1) * h:
        return 0.0
    if x < 0.0:
        x = -x
    u = x / h
    i = int(u)
    if i > n - 2:
        i = n - 2
    t = u - i
    im1 = i - 1
    if im1 < 0:
        im1 = 1
    ip2 = i + 2
    if ip2 > n - 1:
        ip2 = n - 1
    p0 = values[im1]
    p1 = values[i]
    p2 = values[i + 1]
    p3 = values[ip2]
    return p1 + 0.5 * t * (
        p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3
                       + t * (3.0 * (p1 - p2) + p3 - p0))
    )


@njit(cache=True, inline="always")
def _wrap(x):
    return (x + 0.5) % 1.0 - 0.5


@njit(cache=True, inline="always")
def _green_pt(dx, dy, t0, coefn, mtab):
    """N at one displacement: 3x3 image E1 sum + tabulated far field."""
    out = -t0
    for mx in range(-1, 2):
        for my in range(-1, 2):
            ux = dx - mx
            uy = dy - my
            z = (ux * ux + uy * uy) / (4.0 * t0)
            if z < 45.0:
                out += _exp1(z) / (4.0 * np.pi)
    return out + _bs2(coefn, dx * mtab, dy * mtab)


@njit(cache=True, inline="always")
def _k_pt(dx, dy, t0, coefkx, coefky, mtab):
    """K = (d2 N, -d1 N) at one displacement."""
    kx = 0.0
    ky = 0.0
    for mx in range(-1, 2):
        for my in range(-1, 2):
            ux = dx - mx
            uy = dy - my
            r2 = ux * ux + uy * uy
            e = r2 / (4.0 * t0)
            if e < 700.0:
                g = np.exp(-e) / (2.0 * np.pi * r2)
                kx += -uy * g
                ky += ux * g
    kx += _bs2(coefkx, dx * mtab, dy * mtab)
    ky += _bs2(coefky, dx * mtab, dy * mtab)
    return kx, ky


@njit(cache=True)
def drift(pos, t0, coefkx, coefky, mtab, mn, gint, h1, r_min, out):
    """b_i = (1/n) sum_{j != i} K(X_i - X_j), mollified when mn > 0.

    Returns (-1, -1) on success or the first pair closer than r_min
    (bare-kernel mode only).
    """
    n = pos.shape[0]
    for i in range(n):
        bx = 0.0
        by = 0.0
        xi = pos[i, 0]
        yi = pos[i, 1]
        for j in range(n):
            if j == i:
                continue
            dx = _wrap(xi - pos[j, 0])
            dy = _wrap(yi - pos[j, 1])
            r2 = dx * dx + dy * dy
            if r2 == 0.0 or (mn <= 0.0 and r2 < r_min * r_min):
                return i, j
            kx, ky = _k_pt(dx, dy, t0, coefkx, coefky, mtab)
            if mn > 0.0:
                a = mn * np.sqrt(r2)
                if a < 1.0:
                    corr = _interp1(gint, h1, a) / r2
                    kx += dy * corr
                    ky += -dx * corr
            bx += kx
            by += ky
        out[i, 0] = bx / n
        out[i, 1] = by / n
    return -1, -1


@njit(cache=True)
def energy_sums(pos, t0, coefn, mtab, mn, Gtab, gint, Ftab, h1, c2):
    """(sum_{i<j} N, sum_{i<j} G_n*N, sum_{i<j} G_n) in one pass.

    With mn = 0 only the first entry is filled.
    """
    n = pos.shape[0]
    s_n = 0.0
    s_gnn = 0.0
    s_gn = 0.0
    for i in range(n):
        xi = pos[i, 0]
        yi = pos[i, 1]
        for j in range(i + 1, n):
            dx = _wrap(xi - pos[j, 0])
            dy = _wrap(yi - pos[j, 1])
            val = _green_pt(dx, dy, t0, coefn, mtab)
            s_n += val
            if mn > 0.0:
                r = np.sqrt(dx * dx + dy * dy)
                a = mn * r
                gnn = val + c2 / (mn * mn)
                if a < 1.0:
                    lam = _interp1(Ftab, h1, a) - np.log(a) * _interp1(gint, h1, a)
                    gnn -= lam
                    s_gn += mn * mn * _interp1(Gtab, h1, a)
                s_gnn += gnn
    return s_n, s_gnn, s_gn


@njit(cache=True)
def r_pairing(pos, phi, t0, coefkx, coefky, mtab, mn, gint, h1):
    """Delort pairing (1/n^2) sum_{i<j} (phi_i - phi_j) . K(X_i - X_j)."""
    n = pos.shape[0]
    acc = 0.0
    for i in range(n):
        xi = pos[i, 0]
        yi = pos[i, 1]
        for j in range(i + 1, n):
            dx = _wrap(xi - pos[j, 0])
            dy = _wrap(yi - pos[j, 1])
            r2 = dx * dx + dy * dy
            if r2 == 0.0:
                continue
            kx, ky = _k_pt(dx, dy, t0, coefkx, coefky, mtab)
            if mn > 0.0:
                a = mn * np.sqrt(r2)
                if a < 1.0:
                    corr = _interp1(gint, h1, a) / r2
                    kx += dy * corr
                    ky += -dx * corr
            acc += (phi[i, 0] - phi[j, 0]) * kx + (phi[i, 1] - phi[j, 1]) * ky
    return acc / (n * n)


@njit(cache=True)
def grad_n_at(pos, t0, coefkx, coefky, mtab, mn, gint, h1, out):
    """V(X_i) = (1/n) sum_k grad(G_n*N)(X_i - X_k), the compensator field.

    grad N = (-K2, K1); the k = i term vanishes (grad of an even smooth
    function at 0).
    """
    n = pos.shape[0]
    for i in range(n):
        vx = 0.0
        vy = 0.0
        xi = pos[i, 0]
        yi = pos[i, 1]
        for k in range(n):
            if k == i:
                continue
            dx = _wrap(xi - pos[k, 0])
            dy = _wrap(yi - pos[k, 1])
            r2 = dx * dx + dy * dy
            if r2 == 0.0:
                continue
            kx, ky = _k_pt(dx, dy, t0, coefkx, coefky, mtab)
            gx = -ky
            gy = kx
            if mn > 0.0:
                a = mn * np.sqrt(r2)
                if a < 1.0:
                    corr = _interp1(gint, h1, a) / r2
                    gx += dx * corr
                    gy += dy * corr
            vx += gx
            vy += gy
        out[i, 0] = vx / n
        out[i, 1] = vy / n


@njit(cache=True)
def min_pair_dist_sq(pos):
    """Smallest squared pair separation (torus metric)."""
    n = pos.shape[0]
    best = 1.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = _wrap(pos[i, 0] - pos[j, 0])
            dy = _wrap(pos[i, 1] - pos[j, 1])
            r2 = dx * dx + dy * dy
            if r2 < best:
                best = r2
    return best


@njit(cache=True)
def deposit(pos, mn, zeta_c, grid_m, out):
    """Deposit zeta_n bumps: out[i,j] += m^2 zeta(m |node - X_p|) / n."""
    n = pos.shape[0]
    h = 1.0 / grid_m
    half = 0.5 / mn
    span = int(np.ceil(half / h)) + 1
    for p in range(n):
        px = pos[p, 0]
        py = pos[p, 1]
        ci = int(np.floor((px + 0.5) / h))
        cj = int(np.floor((py + 0.5) / h))
        for di in range(-span, span + 1):
            i = (ci + di) % grid_m
            nx = -0.5 + i * h
            dx = _wrap(nx - px)
            if abs(dx) > half:
                continue
            for dj in range(-span, span + 1):
                j = (cj + dj) % grid_m
                ny = -0.5 + j * h
                dy = _wrap(ny - py)
                s2 = (dx * dx + dy * dy) * mn * mn
                if 4.0 * s2 < 1.0 - 1e-14:
                    out[i, j] += (
                        mn * mn * zeta_c * np.exp(-1.0 / (1.0 - 4.0 * s2)) / n
                    )
