"""Stochastic point-vortex dynamics on the flat 2-D torus.

Simulation of the interacting vortex SDE, its mean-field vorticity PDE,
mollified energy diagnostics, and the large-deviation action machinery
(weighted H^-1 norms, control recovery, glued trajectories).
"""

__version__ = "0.1.0"
