"""
Dense orbits and zero exponents
===============================

Repeating the branch pair (1, 3) turns the boundary motion into a rotation
of the circle.  An irrational rotation fills the circle; the derivative
cocycle grows only linearly, so the Lyapunov exponent is zero.
"""

import math

import scipy.optimize

from randbilliards import diagnostics
from randbilliards.billiard import PhasePoint
from randbilliards.feres import FeresParams
from randbilliards.geometry import make_table

table = make_table("flat", 1.0)
p8 = FeresParams.rational(1, 8)
for n, gap in diagnostics.dense_orbit_test(table, p8, PhasePoint(0.0, 1.0), 10_000)[::3]:
    print(f"pairs={n:<6d} cover gap = {gap:.5f}  (L/500 = {table.L / 500:.5f})")

# a start whose rotation is a quarter turn visits only four points
t0 = scipy.optimize.brentq(lambda t: diagnostics.pair_advance(table, p8, t) - 1.25 * table.L,
                           1e-6, math.pi - 2 * p8.alpha - 1e-6)
print("periodic witness gap / L:", diagnostics.dense_orbit_test(table, p8, PhasePoint(0.0, t0), 1000)[-1][1] / table.L)

for kind in ("flat", "hyperbolic", "spherical"):
    t = make_table(kind, 0.9)
    tr = diagnostics.lyapunov(t, FeresParams(0.5), PhasePoint(0.0, 1.0), (0, 1), 100_000, seed=3)
    print(f"{kind:<10} lambda_n at n = 1e5: {tr.lambda_n[-1]:.2e}")
