"""
Chords of a geodesic circle
===========================

A billiard path leaving the boundary at angle theta sweeps a central angle
gamma(theta) before it hits the circle again.  The three constant-curvature
surfaces share one closed form, checked here against an explicit geodesic
construction.
"""

import math

import numpy as np

from randbilliards import geometry
from randbilliards.geometry import make_table

# one table per curvature, with the same geodesic radius
tables = [make_table(kind, 1.0) for kind in ("flat", "hyperbolic", "spherical")]
for t in tables:
    print(f"{t.kind.name:<10} h = {t.h:.6f}  L = {t.L:.6f}  max gamma' = {t.max_derivative:.4f}")

# gamma against the chord oracle on a grid of angles
theta = np.linspace(0.05, math.pi - 0.05, 7)
for t in tables:
    g = geometry.central_angle(t, theta)
    oracle = np.array([geometry.chord_oracle(t, x) for x in theta])
    print(t.kind.name, np.round(g, 4), "max deviation", f"{np.abs(g - oracle).max():.1e}")

# the angle pi/2 always crosses a diameter
print([geometry.central_angle(t, math.pi / 2) / math.pi for t in tables])

# on a small circle every surface looks flat: gamma -> 2 theta
small = make_table("spherical", 1e-4)
print("flat limit error", float(np.abs(geometry.central_angle(small, theta) - 2 * theta).max()))
