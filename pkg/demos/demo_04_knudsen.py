"""
Convergence of the angle distribution
=====================================

Iterating the transfer operator on a histogram shows the two regimes: for
irrational alpha/pi the distribution drifts toward mu, for rational
alpha/pi a point start stays on its finite orbit set.
"""

import math

from randbilliards import measures
from randbilliards.feres import FeresParams
from randbilliards.geometry import make_table

tv = measures.knudsen_run(FeresParams(0.5), measures.uniform_histogram(2000), 400)
for n in (0, 10, 50, 100, 200, 400):
    print(f"alpha=0.5  n={n:<4d} TV to mu = {tv[n]:.5f}")

p8 = FeresParams.rational(1, 8)
tv = measures.knudsen_run(p8, measures.atomic_histogram([math.pi / 16], [1.0], 2000), 100)
print(f"alpha=pi/8 point start: TV stays above {tv.min():.3f}")

# the same question in phase space, by Monte Carlo
half = lambda t: 2.0 * (t < math.pi / 2)  # noqa: E731
res = measures.phase_knudsen(make_table("flat", 1.0), FeresParams(0.5), 200_000, 50, seed=1,
                             density=half, density_max=2.0)
print("phase TV at n = 0, 10, 50:", [round(float(res.tv[k]), 4) for k in (0, 10, 50)])
