"""Frozen numerical constants.

Everything here is a regression value measured by scripts/calibrate.py on
pinned corpora, not a claimed sharp constant.  Tests recompute the cheap
ones and flag drift; the inequality suite enforces the measured bound
constants as regressions.
"""

# normalization of the base mollifier profile: int_0^inf 2 pi r zeta(r) dr = 1
# (adaptive quadrature of the exp(-1/(1-4r^2)) bump)
ZETA_NORM_C = 8.574263103168947

# G = zeta (x) zeta unit-scale profile invariants (192x192 Gauss-Legendre
# self-convolution, 4097-sample radial table)
G_AT_ZERO = 2.167261779292418          # G(0) = int zeta^2
C2_RADIAL = 0.03266390042757147        # (pi/2) int_0^1 s^3 G(s) ds
KAPPA_LOG = 0.20260700563562198        # -int_0^1 s G(s) log s ds

# sup_a (int_a^1 s G ds) / G(a): the constant in the mollified-kernel
# gradient bound |x| |G_n*K - K| <= C0 G(m_n |x|)
C0_GRAD_BOUND = 0.0736

# bound constant for the mollified-energy chain
#   e(zeta_n*rho_n) <= e0 + log(m_n)/(2 pi n) + C/(2n) + C/(2 m_n^2):
# must majorize both c2 and kappa + sigma1(0) + c2/m_1^2 (~ -0.00466)
C_ENERGY_BOUND = 0.04

# sup over the torus of |w(x,y)| = r(x,y) |K(x-y)|  (measured sup 0.2399)
C_K_PAIRING = 0.241

# C_N with C_N + 2 pi N(x) >= -log r(x) on the torus (measured sup 1.4445)
C_N_LOGBOUND = 1.45

# Ladyzhenskaya-type constants, measured on the pinned validation corpus
# (20 random band-limited densities, seed 20240801) and frozen with 5%
# headroom:   ||K*(gamma-eta)||_4^2 <= C1 ||gamma-eta||_2
#             int |K*gamma|^2 dgamma <= C2 ||gamma-1||_2^2
C1_LADYZHENSKAYA = 0.18
C2_VELOCITY = 0.36

# measured sup of (Q_T - e(gamma))/T on the pinned controlled solves
# (single-mode gradient control, amplitude 0.05, nu = 0.1)
CV_CONTROL_REGRESSION = 0.004
